import argparse
import logging

from ..schemas import LatticeFile, MinimaModel, NormalizingMapModel, RunConfig
from ..services.exactnum import format_rational
from ..services.lattice import Lattice, determinant, lll_reduce, minkowski_second_check, reduced_basis, successive_minima
from .common import CommandResult, add_common_flags, load_lattice

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("minima", help="successive minima, reduced basis and normalizing map of a lattice")
    parser.add_argument("--lattice", help="lattice JSON file")
    add_common_flags(parser)
    parser.set_defaults(handler=run, command="minima")


def run(args: argparse.Namespace, config: RunConfig) -> CommandResult:
    lattice = load_lattice(config)
    profile = successive_minima(lattice)
    nmap = reduced_basis(lattice, profile)
    minkowski = minkowski_second_check(lattice, profile)
    if minkowski != "verified":
        logger.warning(f"Minkowski second theorem check is {minkowski}")

    result = {
        "det": format_rational(determinant(lattice)),
        "lll_basis": LatticeFile.from_domain(Lattice(lll_reduce(lattice.basis))).basis,
        "minima": MinimaModel.from_domain(profile).model_dump(),
        "normalizing_map": NormalizingMapModel.from_domain(nmap).model_dump(),
        "minkowski": minkowski,
    }
    summary = [
        "sq_minima: " + " ".join(str(q) for q in profile.sq_minima),
        "reduced_basis: " + "; ".join(" ".join(str(x) for x in row) for row in nmap.reduced_basis),
        "psi: " + "; ".join(" ".join(str(x) for x in row) for row in nmap.matrix),
        f"minkowski: {minkowski}",
    ]
    return CommandResult(result=result, summary=summary)
