from backend.app.config import get_settings
from backend.app.utils.error_handling import retry_with_refinement


def _recording():
    depths = []

    def run(depth: int) -> int:
        depths.append(depth)
        return depth

    return run, depths


def test_retries_double_the_depth():
    run, depths = _recording()
    assert retry_with_refinement(run, depth=2, max_retries=2, should_retry=lambda r: True) == 8
    assert depths == [2, 4, 8]


def test_retries_stop_at_the_depth_cap():
    run, depths = _recording()
    assert retry_with_refinement(run, depth=2, max_retries=5, max_depth=5, should_retry=lambda r: True) == 5
    assert depths == [2, 4, 5]


def test_no_retry_once_conclusive():
    run, depths = _recording()
    retry_with_refinement(run, depth=3, max_retries=4, should_retry=lambda r: r < 6)
    assert depths == [3, 6]


def test_depth_cap_setting():
    settings = get_settings()
    assert settings.MAX_REFINE_DEPTH >= settings.DEFAULT_DEPTH
