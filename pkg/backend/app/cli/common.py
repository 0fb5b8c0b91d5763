"""
Shared plumbing for the command modules: flags, RunConfig assembly, input loading and report output.
"""
import argparse
import logging
import sys
from dataclasses import dataclass, field
from typing import Any, Optional

from pydantic import ValidationError

from ..schemas import FamilyFile, FdFile, LatticeFile, ReportFile, RunConfig, load_model
from ..services.exactnum import to_rational
from ..services.lattice import Lattice
from ..services.semialg import SemialgebraicFamily
from ..utils.error_handling import ConfigParseError

logger = logging.getLogger(__name__)

# flag name -> RunConfig field
_OVERRIDES = {
    "family": "family",
    "params": "params",
    "lattice": "lattice",
    "expr": "expr",
    "method": "method",
    "depth": "depth",
    "samples": "samples",
    "lines": "lines",
    "seed": "seed",
    "retry": "retry",
    "flavor": "flavor",
    "radius": "declared_radius",
    "format_bound": "format_bound",
    "projection_lines": "projection_lines",
}


@dataclass
class CommandResult:
    result: dict[str, Any]
    exit_code: int = 0
    summary: list[str] = field(default_factory=list)


def add_common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="RunConfig JSON file; flags override its values")
    parser.add_argument("--out", help="write the JSON report to this path")
    parser.add_argument("--seed", type=int, help="run seed (64-bit)")
    parser.add_argument("--log-level", dest="log_level", help="DEBUG, INFO, WARNING or ERROR")


def add_family_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--family", help="family JSON file")
    parser.add_argument("--params", type=parse_params, help="comma-separated parameter vector, e.g. 10 or 1/2,3")
    parser.add_argument("--radius", help="declared bounding radius of the fiber")


def add_budget_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--method", choices=["certified-grid", "monte-carlo"])
    parser.add_argument("--depth", type=int, help="subdivision depth budget")
    parser.add_argument("--samples", type=int, help="Monte Carlo samples")
    parser.add_argument("--lines", type=int, help="random axis lines per axis for the empirical Davenport constant")
    parser.add_argument("--projection-lines", dest="projection_lines", type=int)
    parser.add_argument("--retry", type=int, help="refinement retries while a verdict is indeterminate")
    parser.add_argument("--format-bound", dest="format_bound", type=int, help="format F of the family; 0 uses m + n")


def parse_params(text: str) -> list[str]:
    if not text.strip():
        return []
    try:
        return [str(to_rational(p)) for p in text.split(",")]
    except ConfigParseError as exc:
        raise argparse.ArgumentTypeError(exc.message) from exc


def build_config(command: str, args: argparse.Namespace) -> RunConfig:
    """Config file values, then explicit flags on top."""
    base = load_model(args.config, RunConfig).model_dump() if getattr(args, "config", None) else {}
    for flag, name in _OVERRIDES.items():
        value = getattr(args, flag, None)
        if value is not None:
            base[name] = value
    base["command"] = command
    try:
        return RunConfig.model_validate(base)
    except ValidationError as exc:
        raise ConfigParseError(f"Invalid run configuration: {exc}") from exc


def require(config: RunConfig, name: str) -> str:
    value = getattr(config, name)
    if not value:
        raise ConfigParseError(f"--{name} is required for {config.command}")
    return value


def load_family(config: RunConfig) -> tuple[SemialgebraicFamily, Optional[str]]:
    """Family plus the declared radius (the flag wins over the file)."""
    family_file = load_model(require(config, "family"), FamilyFile)
    family = family_file.to_domain()
    return family, config.declared_radius or family_file.declared_radius


def load_lattice(config: RunConfig) -> Lattice:
    return load_model(require(config, "lattice"), LatticeFile).to_domain()


def load_fd_file(config: RunConfig) -> FdFile:
    return load_model(require(config, "expr"), FdFile)


def emit(command: str, config: RunConfig, outcome: CommandResult, timing: dict[str, float], out: Optional[str]) -> ReportFile:
    report = ReportFile.build(command, config, outcome.result, timing)
    for line in outcome.summary:
        print(line)
    if out:
        report.write(out)
        logger.info(f"Report written to {out}")
    elif not outcome.summary:
        sys.stdout.write(report.to_json() + "\n")
    return report
