"""`exact`: exact conditioned expectations from the series engine."""
import argparse
import logging

from gwtrees.commands import (
    add_cap_arguments,
    add_common_arguments,
    add_quantity_flags,
    offspring_spec,
    report,
    sizes,
)
from gwtrees.config import settings
from gwtrees.exceptions import ValidationException
from gwtrees.operations.models import RunConfig
from gwtrees.operations.offspring import OffspringDist, make_offspring
from gwtrees.operations.series import (
    level_means,
    pair_means,
    root_pair_means,
    series_F,
    y_means,
)

logger = logging.getLogger(__name__)

QUANTITIES = {
    "pk": "E P_k(T_n), k = 1..n-1",
    "zk": "E Z_k(T_n), k = 0..n-1",
    "qk": "E Q_k(T_n), k = 1..n-1",
    "y": "E Y_{l,m}(T_n) up to --lmax/--mmax",
    "prob": "P(|T| = n)",
}


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("exact", help="exact expectations for T_n")
    add_common_arguments(parser)
    add_cap_arguments(parser)
    add_quantity_flags(parser, QUANTITIES)
    parser.set_defaults(handler=handle_exact)


def single_quantity(config: RunConfig, default: str) -> str:
    chosen = config.quantities or [default]
    if len(chosen) != 1:
        raise ValidationException(
            f"{config.command} writes one table per run; choose one of the quantity flags",
            details={"given": chosen},
        )
    return chosen[0]


def _indexed(config: RunConfig, n: int, values, first: int) -> list[list]:
    rows = [[n, first + i, float(v)] for i, v in enumerate(values)]
    if config.k is not None:
        rows = [row for row in rows if row[1] == config.k]
    return rows


def exact_rows(dist: OffspringDist, n: int, quantity: str, config: RunConfig) -> list[list]:
    if quantity == "pk":
        return _indexed(config, n, pair_means(dist, n), 1)
    if quantity == "zk":
        return _indexed(config, n, level_means(dist, n), 0)
    if quantity == "qk":
        return _indexed(config, n, root_pair_means(dist, n), 1)
    if quantity == "y":
        lcap = min(config.lmax if config.lmax is not None else settings.lcap, n - 1)
        mcap = min(config.mmax if config.mmax is not None else settings.mcap, n - 1)
        matrix = y_means(dist, n, lcap, mcap)
        return [[n, ell, m, float(matrix[ell, m])] for ell in range(lcap + 1) for m in range(mcap + 1)]
    return [[n, float(series_F(dist, n)[n])]]


HEADERS = {
    "pk": ["n", "k", "mean_P"],
    "zk": ["n", "k", "mean_Z"],
    "qk": ["n", "k", "mean_Q"],
    "y": ["n", "l", "m", "mean_Y"],
    "prob": ["n", "probability"],
}


def handle_exact(config: RunConfig) -> int:
    quantity = single_quantity(config, "pk")
    dist = make_offspring(offspring_spec(config))
    rows = []
    for n in sizes(config):
        rows.extend(exact_rows(dist, n, quantity, config))
    logger.info("exact table", extra={"quantity": quantity, "rows": len(rows)})
    report(config, HEADERS[quantity], rows, offspring=dist.name)
    return 0
