import argparse
import logging

from ..schemas import FDPairModel, PfaffianModel, RunConfig, TrackModel
from ..services.fdcalc import (
    Flavor,
    check_pfaffian,
    closure_family_trace,
    run_rexp_pipeline,
    track_with_trace,
)
from ..utils.error_handling import MalformedExpressionError
from .common import CommandResult, add_common_flags, load_fd_file

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("fd", help="track format and degree through a set expression")
    parser.add_argument("--expr", help="expression JSON file (expr, closure, pfaffian and existential sections)")
    parser.add_argument("--flavor", choices=[f.value for f in Flavor])
    add_common_flags(parser)
    parser.set_defaults(handler=run, command="fd")


def run(args: argparse.Namespace, config: RunConfig) -> CommandResult:
    fd_file = load_fd_file(config)
    flavor = config.flavor
    family = config.components_family.to_domain() if config.components_family else None
    conv = config.conv_family.to_domain() if config.conv_family else None
    result: dict = {"flavor": flavor.value}
    summary: list[str] = []

    if fd_file.expr is not None:
        tracked = track_with_trace(fd_file.expr.to_domain(), flavor, family)
        result["expr"] = TrackModel.from_domain(tracked).model_dump()
        summary.append(f"root: {tracked.fd}")
        for step in tracked.trace:
            summary.append(f"  [{step.index}] {step.kind} {step.rule} -> {step.fd}")
        if tracked.components is not None:
            summary.append(f"components <= {tracked.components}")

    if fd_file.closure:
        rows = []
        for request in fd_file.closure:
            z_fd = request.fd.to_domain()
            traced = closure_family_trace(z_fd, request.which, flavor, request.m, request.n)
            rows.append({
                "which": request.which,
                "m": request.m,
                "n": request.n,
                "input": FDPairModel.from_domain(z_fd).model_dump(),
                "fd": traced.fd.as_list(),
                "nodes": len(traced.trace),
            })
            summary.append(f"{request.which} of {z_fd}: {traced.fd}")
        result["closure"] = rows

    if fd_file.pfaffian:
        rows = []
        for spec_model in fd_file.pfaffian:
            check = check_pfaffian(spec_model.to_domain())
            rows.append(PfaffianModel.from_domain(spec_model.name, check).model_dump())
            flag = f" FLAGGED: {'; '.join(check.discrepancies)}" if check.flagged else ""
            summary.append(f"pfaffian {spec_model.name}: {check.fd}{flag}")
        result["pfaffian"] = rows

    if fd_file.existential:
        rows = []
        for phi_model in fd_file.existential:
            phi = phi_model.to_domain()
            runs = [run_rexp_pipeline(phi, M, conv) for M in fd_file.M]
            pairs = {(r.pfaffian, r.star) for r in runs}
            if len(pairs) != 1:
                logger.warning(f"restriction pipeline for {phi.name} depends on M: {[str(p) for p in pairs]}")
            first = runs[0]
            rows.append({
                "name": phi.name,
                "M": list(fd_file.M),
                "pfaffian": first.pfaffian.as_list(),
                "star": first.star.as_list() if first.star else None,
                "projected": TrackModel.from_domain(first.projected).model_dump(),
                "invariant_in_M": len(pairs) == 1,
            })
            summary.append(f"rexp {phi.name}: pfaffian {first.pfaffian}, projected {first.projected.fd}")
        result["existential"] = rows

    if len(result) == 1:
        raise MalformedExpressionError("fd input has no expr, closure, pfaffian or existential section")
    return CommandResult(result=result, summary=summary)
