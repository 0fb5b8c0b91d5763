import argparse
import logging

from ..schemas import BoundingBoxModel, IntervalModel, ProjectionVolumesModel, RunConfig
from ..services.davenport import davenport_rhs, empirical_h, stage_seed
from ..services.measure import projection_volumes
from ..services.semialg import bounding_radius, fiber
from .common import CommandResult, add_budget_flags, add_common_flags, add_family_flags, load_family, load_lattice

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("davenport", help="certified and empirical Davenport constants of a fiber")
    add_family_flags(parser)
    parser.add_argument("--lattice", help="lattice JSON file whose points the aligned lines pass through (default Z^n)")
    add_budget_flags(parser)
    add_common_flags(parser)
    parser.set_defaults(handler=run, command="davenport")


def run(args: argparse.Namespace, config: RunConfig) -> CommandResult:
    family, declared = load_family(config)
    s = fiber(family, config.params, declared)
    bbox = bounding_radius(s)
    lattice = load_lattice(config) if config.lattice else None
    h = empirical_h(
        s,
        lines=config.lines,
        seed=stage_seed(config.seed, 4),
        radius=bbox.radius,
        projection_lines=config.projection_lines,
        lattice=lattice,
    )
    vs = [
        projection_volumes(
            s, j, method=config.method, depth=config.depth, samples=config.samples,
            seed=stage_seed(config.seed, 2), radius=bbox.radius,
        )
        for j in range(s.n)
    ]
    bound = davenport_rhs(h.certified, vs)
    bound_model = IntervalModel.from_domain(bound)
    if h.empirical > h.certified:
        logger.warning(f"empirical Davenport constant {h.empirical} exceeds certified {h.certified}")

    result = {
        "bounding_box": BoundingBoxModel.from_domain(bbox).model_dump(),
        "h_certified": h.certified,
        "h_empirical": h.empirical,
        "worst_line": h.evidence,
        "V": [ProjectionVolumesModel.from_domain(v).model_dump() for v in vs],
        "bound": bound_model.model_dump(),
    }
    summary = [
        f"h_cert: {h.certified}",
        f"h_emp: {h.empirical}",
        f"worst_line: {h.evidence}",
        f"bound: [{bound_model.lo_decimal}, {bound_model.hi_decimal}]",
    ]
    return CommandResult(result=result, summary=summary)
