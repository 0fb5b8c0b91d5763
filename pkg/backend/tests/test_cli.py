import json
from pathlib import Path

import pytest

from backend.app.main import main
from backend.app.services import davenport


def _run(tmp_path: Path, *argv: str) -> tuple[int, dict]:
    out = tmp_path / "report.json"
    code = main([*argv, "--out", str(out)])
    return code, json.loads(out.read_text()) if out.exists() else {}


def test_version_prints_tool_and_schema(capsys):
    assert main(["version"]) == 0
    assert "olat-report/1" in capsys.readouterr().out


def test_minima_report(samples, tmp_path):
    code, report = _run(tmp_path, "minima", "--lattice", str(samples / "diag23.json"))
    assert code == 0
    assert report["schema"] == "olat-report/1"
    assert report["command"] == "minima"
    assert report["result"]["minima"]["sq_minima"] == ["4/1", "9/1"]
    assert report["result"]["normalizing_map"]["psi"] == [["1/2", "0/1"], ["0/1", "1/3"]]
    assert report["result"]["minkowski"] == "verified"


def test_minima_summary_on_stdout(samples, capsys):
    assert main(["minima", "--lattice", str(samples / "skew.json")]) == 0
    assert "sq_minima: 4 5" in capsys.readouterr().out


def test_count_gauss_circle(samples, tmp_path):
    code, report = _run(
        tmp_path, "count", "--family", str(samples / "disc.json"), "--params", "10",
        "--lattice", str(samples / "z2.json"),
    )
    assert code == 0
    assert report["result"]["count"] == 317
    assert report["result"]["agree"] is True
    assert report["config"]["params"] == ["10/1"]


def test_count_with_declared_radius(samples, tmp_path):
    code, report = _run(
        tmp_path, "count", "--family", str(samples / "declared_disc.json"),
        "--lattice", str(samples / "skew.json"),
    )
    assert code == 0
    assert report["result"]["bounding_box"] == {"radius": "3/1", "source": "declared", "certification": "certified"}


def test_fd_expression_and_flavor(samples, tmp_path):
    code, report = _run(tmp_path, "fd", "--expr", str(samples / "parabola_expr.json"))
    assert code == 0
    assert report["result"]["expr"]["fd"] == [3, 2]

    code, report = _run(tmp_path, "fd", "--expr", str(samples / "half_plane_expr.json"), "--flavor", "weakly-sharp")
    assert code == 0
    assert report["result"]["expr"]["fd"] == [4, 2]
    assert [s["rule"] for s in report["result"]["expr"]["trace"]] == ["S7", "W4"]


def test_fd_closure_rows(samples, tmp_path):
    code, report = _run(tmp_path, "fd", "--expr", str(samples / "closure_expr.json"))
    assert code == 0
    rows = {row["which"]: row for row in report["result"]["closure"]}
    assert set(rows) == {"complement", "interior", "closure", "boundary"}
    assert rows["complement"]["fd"] == [4, 4]


def test_fd_pfaffian_flags_the_exponential(samples, tmp_path):
    code, report = _run(tmp_path, "fd", "--expr", str(samples / "exp_pfaffian.json"))
    assert code == 0
    exp, poly = report["result"]["pfaffian"]
    assert exp["fd"] == [2, 2] and exp["flagged"]
    assert poly["fd"] == [2, 3] and not poly["flagged"]


def test_fd_rexp_with_config_file(samples, tmp_path):
    code, report = _run(
        tmp_path, "fd", "--expr", str(samples / "rexp.json"), "--config", str(samples / "run_config.json"),
        "--flavor", "weakly-sharp",
    )
    assert code == 0
    (row,) = report["result"]["existential"]
    assert row["pfaffian"] == [3, 4]
    assert row["star"] == [3, 64]
    assert row["projected"]["fd"] == [4, 64]
    assert row["invariant_in_M"] is True
    assert report["config"]["flavor"] == "weakly-sharp"
    assert report["config"]["depth"] == 8


def test_reports_are_reproducible_apart_from_timing(samples, tmp_path):
    first = _run(tmp_path, "fd", "--expr", str(samples / "closure_expr.json"))[1]
    second = _run(tmp_path, "fd", "--expr", str(samples / "closure_expr.json"))[1]
    first.pop("timing")
    second.pop("timing")
    assert first == second


def test_davenport_command_on_the_annulus(samples, tmp_path):
    code, report = _run(
        tmp_path, "davenport", "--family", str(samples / "annulus.json"),
        "--lines", "4", "--projection-lines", "2", "--depth", "3",
    )
    assert code == 0
    assert report["result"]["h_empirical"] == 2
    assert report["result"]["h_certified"] == 5


def test_verify_is_indeterminate_at_tiny_depth(samples, tmp_path):
    code, report = _run(
        tmp_path, "verify", "--family", str(samples / "disc.json"), "--params", "5",
        "--lattice", str(samples / "z2.json"), "--depth", "1", "--retry", "0",
        "--lines", "2", "--projection-lines", "1",
    )
    assert code == 4
    assert report["result"]["verdicts"]["davenport"] == "indeterminate"


def test_count_mismatch_aborts_with_a_dump(samples, tmp_path, monkeypatch):
    monkeypatch.setattr(davenport, "count_normalized", lambda s, nmap, radius=None: -1)
    code, report = _run(
        tmp_path, "verify", "--family", str(samples / "disc.json"), "--params", "3",
        "--lattice", str(samples / "z2.json"),
    )
    assert code == 5
    assert report["dump"]["count"] == 29
    assert report["dump"]["count_normalized"] == -1


@pytest.mark.parametrize(
    "argv, expected",
    [
        (["fd", "--expr", "malformed_expr.json"], 2),
        (["fd", "--expr", "missing.json"], 2),
        (["fd"], 2),
        (["count", "--family", "half_plane.json", "--lattice", "z2.json"], 3),
        (["count", "--family", "disc.json", "--params", "1", "--lattice", "z3.json"], 2),
        (["count", "--family", "disc.json", "--lattice", "z2.json"], 2),
    ],
)
def test_exit_codes(samples, argv, expected):
    resolved = [str(samples / a) if a.endswith(".json") else a for a in argv]
    assert main(resolved) == expected


def test_bad_params_are_a_usage_error():
    with pytest.raises(SystemExit) as exc:
        main(["count", "--params", "one,two"])
    assert exc.value.code == 2


def _write(path: Path, payload: dict) -> Path:
    path.write_text(json.dumps(payload))
    return path


def _term(exps, coeff):
    return {"exps": exps, "coeff": coeff}


def test_family_file_written_by_hand_uses_exps(samples, tmp_path):
    family = _write(tmp_path / "disc_by_hand.json", {
        "name": "disc",
        "m": 1,
        "n": 2,
        "formula": {
            "op": "atom",
            "relation": "le",
            "poly": {"arity": 3, "terms": [_term([0, 2, 0], "1"), _term([0, 0, 2], "1"), _term([2, 0, 0], "-1")]},
        },
    })
    code, report = _run(tmp_path, "count", "--family", str(family), "--params", "10", "--lattice", str(samples / "z2.json"))
    assert code == 0
    assert report["result"]["count"] == 317


def test_family_file_with_the_wrong_term_key_is_rejected(samples, tmp_path):
    family = _write(tmp_path / "bad_terms.json", {
        "m": 0,
        "n": 1,
        "formula": {"op": "atom", "relation": "le", "poly": {"arity": 1, "terms": [{"exponents": [2], "coeff": "1"}]}},
    })
    assert main(["count", "--family", str(family), "--lattice", str(samples / "z2.json")]) == 2


def test_verify_with_an_uncertified_radius_is_indeterminate(samples, tmp_path, capsys):
    family = _write(tmp_path / "big_disc.json", {
        "name": "not (x^2 + y^2 > 100)",
        "m": 0,
        "n": 2,
        "declared_radius": "5",
        "formula": {
            "op": "not",
            "args": [{
                "op": "atom",
                "relation": "gt",
                "poly": {"arity": 2, "terms": [_term([2, 0], "1"), _term([0, 2], "1"), _term([0, 0], "-100")]},
            }],
        },
    })
    code, report = _run(
        tmp_path, "verify", "--family", str(family), "--lattice", str(samples / "z2.json"),
        "--depth", "3", "--lines", "2", "--projection-lines", "1",
    )
    assert code == 4
    result = report["result"]
    assert result["bounding_box"]["certification"] == "uncertified"
    assert result["count"] == 121
    assert set(result["verdicts"].values()) == {"indeterminate"}
    assert result["retries"] == 0
    assert any("uncertified" in note for note in result["notes"])
    assert "note: bounding radius 5" in capsys.readouterr().out


def test_davenport_command_with_lattice_aligned_lines(samples, tmp_path):
    code, report = _run(
        tmp_path, "davenport", "--family", str(samples / "annulus.json"), "--lattice", str(samples / "skew.json"),
        "--lines", "2", "--projection-lines", "1", "--depth", "3",
    )
    assert code == 0
    assert report["result"]["h_empirical"] == 2
    assert report["config"]["lattice"].endswith("skew.json")
