import argparse
import logging

from ..schemas import RunConfig, VerificationModel
from ..services.davenport import VERIFIED, verify
from .common import CommandResult, add_budget_flags, add_common_flags, add_family_flags, load_family, load_lattice

logger = logging.getLogger(__name__)

EXIT_INDETERMINATE = 4


def register(subparsers) -> None:
    parser = subparsers.add_parser("verify", help="verify the lattice counting inequality for one fiber")
    add_family_flags(parser)
    parser.add_argument("--lattice", help="lattice JSON file")
    add_budget_flags(parser)
    add_common_flags(parser)
    parser.set_defaults(handler=run, command="verify")


def run(args: argparse.Namespace, config: RunConfig) -> CommandResult:
    family, declared = load_family(config)
    lattice = load_lattice(config)
    report = verify(family, config.params, lattice, plan=config.plan(), declared_radius=declared)
    model = VerificationModel.from_domain(report)

    all_verified = all(v == VERIFIED for v in report.verdicts.values())
    m = report.measurements
    summary = [
        f"count: {report.count} (normalized {report.count_normalized})",
        f"lhs: [{model.lhs.lo_decimal}, {model.lhs.hi_decimal}]",
        f"davenport_rhs: [{model.davenport_rhs.lo_decimal}, {model.davenport_rhs.hi_decimal}] -> {m.verdicts['davenport']}",
        f"bw_rhs: [{model.bw_rhs.lo_decimal}, {model.bw_rhs.hi_decimal}] -> {m.verdicts['bw']}",
    ]
    summary += [f"vprime_{v.j}: {v.value:.6g} ({v.label})" for v in report.vprime]
    summary += [f"note: {note}" for note in report.notes]
    return CommandResult(
        result=model.model_dump(mode="json"),
        exit_code=0 if all_verified else EXIT_INDETERMINATE,
        summary=summary,
    )
