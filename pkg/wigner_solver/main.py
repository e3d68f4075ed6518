import argparse
import logging
import sys
import time
from datetime import datetime
from typing import List, Optional

from wigner_solver.commands import run, studies
from wigner_solver.config import get_settings
from wigner_solver.errors import ConfigError, NumericalError, OutputError, WignerError
from wigner_solver.services.run_ledger import RunLedger

logger = logging.getLogger(__name__)

_STATUS = {
    ConfigError: "config_error",
    NumericalError: "numerical_error",
    OutputError: "io_error",
}


def build_parser() -> argparse.ArgumentParser:
    settings = get_settings()
    parser = argparse.ArgumentParser(
        prog="wigner",
        description=f"{settings.app_name}: Hermite-spectral split-step solver for the 1-d Wigner equation",
    )
    parser.add_argument("--verbose", "-v", action="store_true", help="debug logging")
    subparsers = parser.add_subparsers(dest="command", required=True)
    run.register(subparsers)
    studies.register(subparsers)
    return parser


def _status(exc: WignerError) -> str:
    for cls, status in _STATUS.items():
        if isinstance(exc, cls):
            return status
    return "error"


def _record(args, started_at: datetime, wall_clock: float, status: str, fields: dict, message: Optional[str] = None):
    if not get_settings().record_runs or not getattr(args, "record", True):
        return
    try:
        RunLedger().record(
            command=args.command,
            started_at=started_at,
            wall_clock_s=wall_clock,
            status=status,
            preset=getattr(args, "preset", None),
            message=message,
            **fields,
        )
    except OutputError as exc:
        logger.warning("run not recorded: %s", exc)


def main(argv: Optional[List[str]] = None) -> int:
    """CLI entry point; returns the process exit code."""
    settings = get_settings()
    args = build_parser().parse_args(argv)
    level = logging.DEBUG if args.verbose or settings.debug else getattr(logging, settings.log_level.upper(), logging.INFO)
    logging.basicConfig(format="[%(module)-12s] %(message)s", level=level)

    started_at = datetime.now()
    started = time.perf_counter()
    try:
        fields = args.handler(args) or {}
    except WignerError as exc:
        logger.error("%s", exc)
        print(f"❌ {exc}", file=sys.stderr)
        _record(args, started_at, time.perf_counter() - started, _status(exc), {}, message=str(exc))
        return exc.exit_code
    _record(args, started_at, time.perf_counter() - started, "ok", fields)
    return 0


if __name__ == "__main__":
    sys.exit(main())
