"""`oracle`: the same tables as `exact`, by exhaustive enumeration for small n."""
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
from gwtrees.commands.exact import HEADERS, single_quantity
from gwtrees.config import settings
from gwtrees.operations.models import RunConfig
from gwtrees.operations.offspring import make_offspring
from gwtrees.operations.oracle import exact_conditioned_expectation, weighted_trees
from gwtrees.operations.stats import pair_profile
from gwtrees.operations.trees import to_lukasiewicz

logger = logging.getLogger(__name__)

QUANTITIES = {
    "pk": "E P_k(T_n) by enumeration",
    "zk": "E Z_k(T_n) by enumeration",
    "qk": "E Q_k(T_n) by enumeration",
    "y": "E Y_{l,m}(T_n) by enumeration",
    "trees": "every tree of size n with its probability",
}


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("oracle", help="enumeration ground truth for n <= 12")
    add_common_arguments(parser)
    add_cap_arguments(parser)
    add_quantity_flags(parser, QUANTITIES)
    parser.set_defaults(handler=handle_oracle)


def _filter_k(config: RunConfig, rows: list[list]) -> list[list]:
    if config.k is None:
        return rows
    return [row for row in rows if row[1] == config.k]


def handle_oracle(config: RunConfig) -> int:
    quantity = single_quantity(config, "pk")
    dist = make_offspring(offspring_spec(config))
    rows: list[list] = []
    for n in sizes(config):
        if quantity == "trees":
            weighted = weighted_trees(dist, n)
            rows.extend(
                [n, " ".join(map(str, to_lukasiewicz(tree))), w, w / weighted.total_weight if weighted.total_weight else 0.0]
                for tree, w in weighted.trees
            )
        elif quantity == "y":
            lcap = min(config.lmax if config.lmax is not None else settings.lcap, n - 1)
            mcap = min(config.mmax if config.mmax is not None else settings.mcap, n - 1)
            matrix = exact_conditioned_expectation(dist, n, lambda tree: pair_profile(tree, lcap, mcap).y)
            rows.extend([n, ell, m, float(matrix[ell, m])] for ell in range(lcap + 1) for m in range(mcap + 1))
        else:
            statistic = {"pk": "P", "zk": "Z", "qk": "Q"}[quantity]
            values = exact_conditioned_expectation(dist, n, statistic)
            first = 0 if quantity == "zk" else 1
            rows.extend(_filter_k(config, [[n, k, float(values[k])] for k in range(first, n) if k < len(values)]))
    header = ["n", "lukasiewicz", "weight", "conditional"] if quantity == "trees" else HEADERS[quantity]
    logger.info("oracle table", extra={"quantity": quantity, "rows": len(rows)})
    report(config, header, rows, offspring=dist.name)
    return 0
