"""`verify`: run one named verification suite and write its table."""
import argparse
import logging

from gwtrees.commands import float_list, add_cap_arguments, add_common_arguments, report
from gwtrees.exceptions import ValidationException, VerificationFailedException
from gwtrees.operations.models import RunConfig
from gwtrees.operations.verify import SUITES, run_suite

logger = logging.getLogger(__name__)


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("verify", help="run a verification suite")
    parser.add_argument("suite", choices=sorted(SUITES))
    add_common_arguments(parser)
    parser.add_argument("--nmax", type=int, help="largest n of a sweep")
    add_cap_arguments(parser)
    parser.add_argument("--eta", action="append", help="displacement law; repeat for several")
    parser.add_argument("--reps", type=int, help="Monte Carlo replicates")
    parser.add_argument("--beta", type=float, help="opening angle of the domain")
    parser.add_argument("--delta", type=float, help="radius excess of the domain")
    parser.add_argument("--grid", type=int, help="number of domain points")
    parser.add_argument("--t", type=float, action="append", help="frequency; repeat for several")
    parser.add_argument("--t-list", type=float_list, help="comma-separated frequencies")
    parser.set_defaults(handler=handle_verify)


def handle_verify(config: RunConfig) -> int:
    if config.suite is None:
        raise ValidationException("verify needs a suite name", details={"known": sorted(SUITES)})
    result = run_suite(config.suite, config)
    report(config, result.header, result.rows, suite=result.name, passed=result.passed, metrics=result.metrics)
    if not result.passed:
        raise VerificationFailedException(
            check=result.name,
            observed=result.metrics["observed"],
            tolerance=result.metrics["tolerance"],
            anchor=result.anchor,
            details=result.metrics,
        )
    return 0
