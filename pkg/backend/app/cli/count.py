import argparse

from ..schemas import BoundingBoxModel, RunConfig
from ..services.davenport import count_normalized, enumerate_lattice_points
from ..services.lattice import reduced_basis
from ..services.semialg import bounding_radius, fiber
from .common import CommandResult, add_common_flags, add_family_flags, load_family, load_lattice


def register(subparsers) -> None:
    parser = subparsers.add_parser("count", help="count lattice points of a fiber directly and through the normalizing map")
    add_family_flags(parser)
    parser.add_argument("--lattice", help="lattice JSON file")
    add_common_flags(parser)
    parser.set_defaults(handler=run, command="count")


def run(args: argparse.Namespace, config: RunConfig) -> CommandResult:
    family, declared = load_family(config)
    lattice = load_lattice(config)
    s = fiber(family, config.params, declared)
    bbox = bounding_radius(s)
    direct = enumerate_lattice_points(s, lattice, bbox.radius)
    normalized = count_normalized(s, reduced_basis(lattice), bbox.radius)
    result = {
        "bounding_box": BoundingBoxModel.from_domain(bbox).model_dump(),
        "count": direct.count,
        "count_normalized": normalized,
        "agree": direct.count == normalized,
    }
    summary = [f"count: {direct.count}", f"count_normalized: {normalized}"]
    return CommandResult(result=result, summary=summary)
