import argparse
import logging
import sys

from gwtrees.commands import config_from_args
from gwtrees.commands import exact, oracle, profile, sample, verify
from gwtrees.config import settings
from gwtrees.middleware.exception_handlers import EXIT_USAGE, handle_exception


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gwtrees",
        description="Sample, compute exactly and verify statistics of conditioned Galton-Watson trees.",
    )
    parser.add_argument("--log-level", default=None, help="overrides GWTREES_LOG_LEVEL")
    subparsers = parser.add_subparsers(dest="command", required=True)

    sample.register(subparsers)
    exact.register(subparsers)
    oracle.register(subparsers)
    verify.register(subparsers)
    profile.register(subparsers)
    return parser


def configure_logging(level: str | None) -> None:
    logging.basicConfig(
        level=(level or settings.log_level).upper(),
        stream=sys.stderr,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else 0

    configure_logging(args.log_level)
    try:
        config = config_from_args(args)
        return args.handler(config)
    except Exception as exc:
        return handle_exception(exc)


if __name__ == "__main__":
    sys.exit(main())
