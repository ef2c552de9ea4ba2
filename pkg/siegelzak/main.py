import argparse
import logging
import sys
from typing import List, Optional

from siegelzak.cli import info, pointset, run
from siegelzak.config import settings
from siegelzak.core.errors import EXIT_CONFIG, EXIT_FAIL, SiegelZakError

logger = logging.getLogger("cli")


def configure_logging(level: Optional[str] = None) -> None:
    handlers: List[logging.Handler] = [logging.StreamHandler()]
    if settings.LOG_FILE:
        handlers.append(logging.FileHandler(settings.LOG_FILE))
    logging.basicConfig(
        level=(level or settings.LOG_LEVEL).upper(),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        handlers=handlers,
        force=True,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="siegelzak",
        description="Siegel transforms, cut-and-project sets and aperiodic Zak transforms: verification suites.",
    )
    parser.add_argument("--version", action="version", version=f"{settings.PROJECT_NAME} {settings.VERSION}")
    parser.add_argument("--log-level", default=None, help=f"Logging level (default: {settings.LOG_LEVEL})")
    parser.add_argument(
        "--workers", type=int, default=None, help=f"Monte-Carlo worker threads (default: {settings.MAX_WORKERS})"
    )
    subparsers = parser.add_subparsers(dest="command", metavar="command")
    subparsers.required = True
    run.register(subparsers)
    pointset.register(subparsers)
    info.register(subparsers)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    try:
        configure_logging(args.log_level)
        return args.func(args)
    except SiegelZakError as exc:
        print(f"error: {exc.detail}", file=sys.stderr)
        return exc.exit_code
    except ValueError as exc:
        message = str(exc).strip().splitlines()[0] if str(exc).strip() else type(exc).__name__
        logger.error(f"Invalid input: {message}")
        print(f"error: {message}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        logger.error(f"I/O failure: {exc}")
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
