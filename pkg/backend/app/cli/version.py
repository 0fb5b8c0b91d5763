import argparse

from ..config import get_settings
from ..schemas import RunConfig
from .common import CommandResult


def register(subparsers) -> None:
    parser = subparsers.add_parser("version", help="print tool and report schema versions")
    parser.set_defaults(handler=run, command="version")


def run(args: argparse.Namespace, config: RunConfig) -> CommandResult:
    settings = get_settings()
    return CommandResult(
        result={"tool_version": settings.TOOL_VERSION, "schema": settings.REPORT_SCHEMA},
        summary=[f"{settings.APP_NAME} {settings.TOOL_VERSION} ({settings.REPORT_SCHEMA})"],
    )
