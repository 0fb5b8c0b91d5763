import argparse
import json
import logging
import sys
import time
import uuid
from typing import Optional, Sequence

from .cli import COMMANDS
from .cli.common import build_config, emit
from .config import get_settings
from .utils.error_handling import OlatError, TheoremViolationError

settings = get_settings()
logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


def configure_logging(level: Optional[str] = None) -> None:
    logging.basicConfig(
        level=getattr(logging, (level or settings.LOG_LEVEL).upper(), logging.INFO),
        format=LOG_FORMAT,
        stream=sys.stderr,
        force=True,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="olat",
        description="Lattice point counting in definable families: verification, minima and format/degree tracking",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    for module in COMMANDS:
        module.register(subparsers)
    return parser


def _write_dump(exc: TheoremViolationError, out: Optional[str]) -> None:
    payload = json.dumps({"error": exc.message, "dump": exc.dump}, sort_keys=True, indent=2, default=str)
    if out:
        with open(out, "w") as fh:
            fh.write(payload + "\n")
    else:
        sys.stderr.write(payload + "\n")


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Run one command and return its exit code (0 ok, 2 parse, 3 unbounded or guard, 4 indeterminate, 5 abort)."""
    args = build_parser().parse_args(argv)
    configure_logging(getattr(args, "log_level", None))
    out = getattr(args, "out", None)

    run_id = str(uuid.uuid4())[:8]
    start_time = time.time()
    logger.info(f"[{run_id}] {args.command} started (env: {settings.APP_ENV})")

    try:
        config = build_config(args.command, args)
        outcome = args.handler(args, config)
        duration_ms = (time.time() - start_time) * 1000
        emit(args.command, config, outcome, {"total_ms": round(duration_ms, 3)}, out)
        logger.info(f"[{run_id}] {args.command} - Exit: {outcome.exit_code} - Duration: {duration_ms:.0f}ms")
        return outcome.exit_code
    except TheoremViolationError as exc:
        logger.error(f"[{run_id}] {args.command} aborted: {exc.message}")
        _write_dump(exc, out)
        return exc.exit_code
    except OlatError as exc:
        duration_ms = (time.time() - start_time) * 1000
        logger.error(
            f"[{run_id}] {args.command} - {exc.__class__.__name__}: {exc.message} - Duration: {duration_ms:.0f}ms"
        )
        return exc.exit_code
    except Exception as exc:
        logger.error(f"[{run_id}] Unhandled exception: {exc}", exc_info=True)
        return 1


if __name__ == "__main__":
    sys.exit(main())
