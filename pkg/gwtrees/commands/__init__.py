"""
Command-line subcommands. Each module registers one subparser and binds a
handler taking a validated RunConfig and returning an exit status.
"""
import argparse
from typing import Any, Callable

from gwtrees.exceptions import ValidationException
from gwtrees.operations.models import RunConfig
from gwtrees.reports.writer import build_meta, write_rows

Handler = Callable[[RunConfig], int]

# argparse destinations that are not RunConfig fields
_PARSER_ONLY = {"handler", "log_level", "n_list", "nmax", "t_list"}


def float_list(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def int_list(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def add_common_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--offspring", action="append", help="offspring law; verify accepts it repeated")
    parser.add_argument("--n", type=int, action="append", help="tree size; repeat for several")
    parser.add_argument("--n-list", type=int_list, help="comma-separated tree sizes")
    parser.add_argument("--seed", type=int, help="master seed")
    parser.add_argument("--out", help="output path (default stdout)")
    parser.add_argument("--format", choices=["csv", "json"])


def add_cap_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--k", type=int, help="level or distance index")
    parser.add_argument("--lmax", type=int, help="cap on l")
    parser.add_argument("--mmax", type=int, help="cap on m")


def add_quantity_flags(parser: argparse.ArgumentParser, flags: dict[str, str]) -> None:
    for flag, help_text in flags.items():
        parser.add_argument(f"--{flag}", dest="quantities", action="append_const", const=flag, help=help_text)


def config_from_args(args: argparse.Namespace) -> RunConfig:
    """RunConfig from the flags actually given; omitted flags keep model defaults."""
    values: dict[str, Any] = {
        key: value
        for key, value in vars(args).items()
        if key not in _PARSER_ONLY and value is not None
    }
    sizes = (args.n or []) + (getattr(args, "n_list", None) or [])
    if getattr(args, "nmax", None) is not None:
        sizes.append(args.nmax)
    if sizes:
        values["n"] = sizes
    times = (getattr(args, "t", None) or []) + (getattr(args, "t_list", None) or [])
    if times:
        values["t"] = times
    return RunConfig(**values)


def only(values: list[Any], flag: str) -> Any:
    """The single value of a flag that a command reports for one setting only."""
    if len(values) > 1:
        raise ValidationException(f"{flag} takes a single value here", details={"flag": flag, "values": values})
    return values[0]


def offspring_spec(config: RunConfig, default: str = "geometric") -> str:
    return only(config.offspring or [default], "--offspring")


def sizes(config: RunConfig) -> list[int]:
    if not config.n:
        raise ValidationException(f"{config.command} needs --n or --n-list")
    return config.n


def report(config: RunConfig, header: list[str], rows: list[list[Any]], **extra: Any) -> None:
    write_rows(rows, header, config.out, config.format, build_meta(config, **extra))
