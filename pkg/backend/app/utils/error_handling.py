"""
Error handling utilities with bounded refinement retries and validation.
"""
import logging
import functools
import time
from typing import TypeVar, Callable, Any, Optional

logger = logging.getLogger(__name__)

T = TypeVar("T")


class OlatError(Exception):
    """Base exception for olat errors. The exit code is what the CLI returns."""
    def __init__(self, message: str, exit_code: int = 1, retryable: bool = False):
        self.message = message
        self.exit_code = exit_code
        self.retryable = retryable
        super().__init__(self.message)


class ConfigParseError(OlatError):
    """Configuration, family, lattice or expression file could not be parsed."""
    def __init__(self, message: str):
        super().__init__(message, exit_code=2)


class ArityMismatchError(OlatError):
    """A point, box or polynomial has the wrong number of coordinates."""
    def __init__(self, message: str):
        super().__init__(message, exit_code=2)


class ZeroPolynomialError(OlatError):
    """Operation is undefined on the zero polynomial."""
    def __init__(self, message: str = "zero polynomial has no isolated roots"):
        super().__init__(message, exit_code=2)


class EndpointRootError(OlatError):
    """Sturm counting requires the polynomial to be nonzero at both endpoints."""
    def __init__(self, message: str):
        super().__init__(message, exit_code=2)


class MalformedExpressionError(OlatError):
    """Set expression DAG is malformed or has inconsistent ambient dimensions."""
    def __init__(self, message: str):
        super().__init__(message, exit_code=2)


class MissingPolynomialFamilyError(OlatError):
    """A polynomial family (S1 bound or star conversion) was required but not supplied."""
    def __init__(self, message: str):
        super().__init__(message, exit_code=2)


class NonExistentialFormulaError(OlatError):
    """The exp restriction pipeline only accepts existential formulas."""
    def __init__(self, message: str = "formula is not existential; no effective conversion is known"):
        super().__init__(message, exit_code=2)


class UnboundedFiberError(OlatError):
    """No bounding radius could be extracted from the fiber and none was declared."""
    def __init__(self, message: str):
        super().__init__(message, exit_code=3)


class DimensionGuardError(OlatError):
    """Enumeration dimension exceeds the configured guard."""
    def __init__(self, message: str):
        super().__init__(message, exit_code=3)


class TheoremViolationError(OlatError):
    """A certified left-hand side exceeded a certified right-hand side."""
    def __init__(self, message: str, dump: Optional[dict] = None):
        self.dump = dump or {}
        super().__init__(message, exit_code=5)


def retry_with_refinement(
    func: Callable[..., T],
    *args,
    depth: int,
    max_retries: int = 1,
    depth_factor: int = 2,
    max_depth: Optional[int] = None,
    should_retry: Callable[[T], bool] = lambda result: False,
    **kwargs
) -> T:
    """
    Run a budgeted computation, re-running it with a larger depth budget while
    its result is still inconclusive.

    Grid work near a boundary of dimension n - 1 grows like 2^((n-1) * depth),
    so each doubling can cost far more than the run before it; ``max_depth``
    caps the budget and stops early once the cap is reached.

    Args:
        func: Function accepting a ``depth`` keyword argument
        depth: Initial subdivision depth
        max_retries: Maximum number of refinement attempts
        depth_factor: Multiplier applied to the depth on each retry
        max_depth: Largest depth a retry may use
        should_retry: Predicate on the result deciding whether to refine
    """
    result = func(*args, depth=depth, **kwargs)

    for attempt in range(max_retries):
        if not should_retry(result):
            return result

        new_depth = depth * depth_factor if depth > 0 else 1
        if max_depth is not None:
            new_depth = min(new_depth, max_depth)
        if new_depth <= depth:
            logger.warning(f"{func.__name__} inconclusive at the depth cap {depth}; not retrying")
            return result
        logger.warning(
            f"Attempt {attempt + 1}/{max_retries + 1} of {func.__name__} inconclusive at depth {depth}. "
            f"Retrying at depth {new_depth}."
        )
        depth = new_depth
        result = func(*args, depth=depth, **kwargs)

    return result


def timed(stage: str):
    """Decorator logging start, finish and duration of a pipeline stage."""
    def decorator(func: Callable[..., T]) -> Callable[..., T]:
        @functools.wraps(func)
        def wrapper(*args, **kwargs) -> T:
            start_time = time.time()
            logger.debug(f"[{stage}] started")
            result = func(*args, **kwargs)
            duration_ms = (time.time() - start_time) * 1000
            logger.info(f"[{stage}] finished ({duration_ms:.0f}ms)")
            return result
        return wrapper
    return decorator


class LatticeValidator:
    """Validate lattice bases before building a Lattice."""

    @classmethod
    def validate_basis(cls, rows: list[list[Any]]) -> tuple[bool, str]:
        if not rows:
            return False, "Lattice basis is empty."
        n = len(rows)
        for i, row in enumerate(rows):
            if len(row) != n:
                return False, f"Basis row {i} has {len(row)} entries, expected {n} (basis must be square)."
        return True, ""


class FormulaValidator:
    """Validate formula atoms against the declared family arity."""

    @classmethod
    def validate_arity(cls, atom_arities: list[int], expected: int) -> tuple[bool, str]:
        bad = [a for a in atom_arities if a != expected]
        if bad:
            return False, f"Atoms with arity {sorted(set(bad))} found, expected arity {expected}."
        if not atom_arities:
            return True, "Formula has no atoms; it is constant."
        return True, ""


def log_stage(stage: str, params: dict):
    """Log the parameters a stage starts with."""
    logger.info(f"[{stage}] Params: {params}")


def log_stage_result(stage: str, result_data: dict, duration_ms: float = None):
    """Log a stage result."""
    duration_str = f" ({duration_ms:.0f}ms)" if duration_ms else ""

    # Truncate large results for logging
    log_data = str(result_data)
    if len(log_data) > 500:
        log_data = log_data[:500] + "..."

    logger.info(f"[{stage}] Result{duration_str}: {log_data}")
