"""
Sample family, lattice, expression and run-config payloads.
Run with: python -m backend.app.fixtures <directory>

Existing files are left untouched, so edited samples survive a re-run.
"""
import argparse
import logging
from pathlib import Path
from typing import Any, Optional

from .schemas import ExprFile, FamilyFile, LatticeFile, dump_json
from .services import shapes
from .services.exactnum import Polynomial
from .services.fdcalc import FDPair, Intersection, Leaf, Projection, ZeroSet
from .services.lattice import Lattice
from .services.semialg import FiberSet, SemialgebraicFamily

logger = logging.getLogger(__name__)


def _fixed(s: FiberSet) -> SemialgebraicFamily:
    return SemialgebraicFamily(m=0, n=s.n, formula=s.formula)


def _family(name: str, family: SemialgebraicFamily, declared_radius: Optional[str] = None) -> dict[str, Any]:
    return FamilyFile.from_domain(family, name=name, declared_radius=declared_radius).model_dump(mode="json")


def _lattice(name: str, rows) -> dict[str, Any]:
    return LatticeFile.from_domain(Lattice(tuple(tuple(r) for r in rows)), name=name).model_dump(mode="json")


def sample_families() -> dict[str, dict[str, Any]]:
    return {
        "disc.json": _family("disc", shapes.disc_family()),
        "open_disc.json": _family("open disc", shapes.ball_family(2, strict=True)),
        "ball3.json": _family("ball", shapes.ball_family(3)),
        "annulus.json": _family("annulus 3..6", _fixed(shapes.annulus(3, 6))),
        "box.json": _family("box 4x2", _fixed(shapes.box([4, 2]))),
        "ellipse.json": _family("ellipse 5x3", _fixed(shapes.ellipsoid([5, 3]))),
        "two_discs.json": _family("two discs", _fixed(shapes.two_discs(2, 8))),
        "declared_disc.json": _family("disc with declared radius", _fixed(shapes.disc(2)), declared_radius="3"),
        "half_plane.json": _family("half plane", _fixed(shapes.half_plane())),
        "parabola.json": _family("x - T - z^2 = 0", shapes.parabola_family()),
    }


def sample_lattices() -> dict[str, dict[str, Any]]:
    return {
        "z2.json": _lattice("Z^2", [[1, 0], [0, 1]]),
        "diag23.json": _lattice("diag(2,3)", [[2, 0], [0, 3]]),
        "skew.json": _lattice("(2,0),(1,2)", [[2, 0], [1, 2]]),
        "z3.json": _lattice("Z^3", [[1, 0, 0], [0, 1, 0], [0, 0, 1]]),
    }


def sample_expressions() -> dict[str, dict[str, Any]]:
    x, y, z = Polynomial.variables(3)
    parabola = ZeroSet(x - y - z * z, 3)
    quadric = Leaf(FDPair(6, 2), 3, label="quadric")
    other = Leaf(FDPair(6, 2), 3, label="quadric'")
    parabola_nodes = ExprFile.from_domain(parabola).model_dump(mode="json")["nodes"]
    return {
        "parabola_expr.json": {"expr": ExprFile.from_domain(parabola).model_dump(mode="json")},
        "half_plane_expr.json": {"expr": ExprFile.from_domain(Projection(parabola)).model_dump(mode="json")},
        "linear_graph_expr.json": {"expr": ExprFile.from_domain(Intersection((quadric, other))).model_dump(mode="json")},
        "closure_expr.json": {
            "closure": [
                {"which": which, "fd": {"format": 2, "degree": 2}, "m": 0, "n": 2}
                for which in ("complement", "interior", "closure", "boundary")
            ],
        },
        "exp_pfaffian.json": {
            "pfaffian": [
                {"name": "exp", "n": 1, "k": 1, "chain_degrees": [1], "poly_degree": 1,
                 "stated_format": 1, "stated_degree": 2},
                {"name": "x^2 + y^3", "n": 2, "k": 0, "chain_degrees": [], "poly_degree": 3},
            ],
        },
        "rexp.json": {
            "existential": [
                {"name": "y = exp(x), y <= 2", "free_vars": 1, "quantified_vars": 1,
                 "exp_occurrences": 1, "atom_degrees": [1, 1]},
            ],
            "M": [1, 10, 1000],
        },
        "malformed_expr.json": {
            "expr": {"nodes": parabola_nodes + [{"kind": "union", "children": [0]}]},
        },
    }


def sample_configs() -> dict[str, dict[str, Any]]:
    return {
        "run_config.json": {
            "method": "certified-grid",
            "depth": 8,
            "lines": 64,
            "seed": 0,
            "flavor": "sharp",
            "components_family": {"name": "D", "terms": [{"coeff": "1", "degree_exp": 1}]},
            "conv_family": {"name": "D^F", "terms": [{"coeff": "1", "degree_exp": "F"}]},
        },
    }


def write_samples(directory: Path) -> list[Path]:
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    payloads: dict[str, dict[str, Any]] = {}
    for group in (sample_families(), sample_lattices(), sample_expressions(), sample_configs()):
        payloads.update(group)
    for name, payload in payloads.items():
        path = directory / name
        if path.exists():
            logger.info(f"{path} already exists. Skipping.")
            continue
        path.write_text(dump_json(payload) + "\n")
        written.append(path)
    print(f"Wrote {len(written)} sample files to {directory}")
    return written


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description="Write sample payloads for the olat CLI")
    parser.add_argument("directory", nargs="?", default="samples")
    write_samples(Path(parser.parse_args().directory))
