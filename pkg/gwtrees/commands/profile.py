"""`profile`: vertical and normalised profiles of labelled trees, and Psi sweeps."""
import argparse
import logging
import math

import numpy as np

from gwtrees.commands import add_common_arguments, add_quantity_flags, float_list, offspring_spec, only, report, sizes
from gwtrees.commands.exact import single_quantity
from gwtrees.exceptions import ValidationException
from gwtrees.operations.labels import (
    exact_psi,
    gamma,
    make_displacement,
    normalized_profile,
    psi_sweep,
    vertical_profile,
)
from gwtrees.operations.models import RunConfig
from gwtrees.operations.offspring import make_offspring
from gwtrees.operations.streams import replicate_rng
from gwtrees.operations.trees import sample_conditioned

logger = logging.getLogger(__name__)

QUANTITIES = {
    "vertical": "X(j; T_n) for --count labelled trees",
    "normalized": "normalised profile on the --x grid",
    "normalized-t2b": "normalised profile without gamma scaling",
    "psi": "Monte Carlo Psi(n, t)",
    "exact-psi": "Psi(n, t) from the exact series",
}

DEFAULT_X = np.linspace(-3.0, 3.0, 121)


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("profile", help="vertical profiles and Psi(n, t)")
    add_common_arguments(parser)
    parser.add_argument("--eta", action="append", help="displacement law (one)")
    parser.add_argument("--count", type=int, help="number of labelled trees")
    parser.add_argument("--reps", type=int, help="replicates for --psi")
    parser.add_argument("--t", type=float, action="append", help="frequency; repeat for several")
    parser.add_argument("--t-list", type=float_list, help="comma-separated frequencies")
    parser.add_argument("--x", type=float_list, help="comma-separated x grid for normalised profiles")
    add_quantity_flags(parser, QUANTITIES)
    parser.set_defaults(handler=handle_profile)


def _frequencies(config: RunConfig) -> list[float]:
    return config.t if config.t is not None else list(np.linspace(-math.pi, math.pi, 41))


def handle_profile(config: RunConfig) -> int:
    quantity = single_quantity(config, "vertical")
    dist = make_offspring(offspring_spec(config))
    eta = make_displacement(only(config.eta or ["uniform3"], "--eta"))
    rows: list[list] = []
    if quantity in ("psi", "exact-psi"):
        for n in sizes(config):
            if quantity == "exact-psi":
                rows.extend([n, t, exact_psi(dist, eta, n, t)] for t in _frequencies(config))
                continue
            if config.reps is None:
                raise ValidationException("--psi needs --reps")
            estimates = psi_sweep(dist, eta, n, _frequencies(config), config.reps, config.seed + n)
            rows.extend([e.n, e.t, e.psi, e.stderr] for e in estimates)
        header = ["n", "t", "psi", "stderr"] if quantity == "psi" else ["n", "t", "psi"]
        report(config, header, rows, offspring=dist.name, eta=eta.name)
        return 0

    xgrid = np.asarray(config.x) if config.x is not None else DEFAULT_X
    g = gamma(dist, eta)
    n = only(sizes(config), "--n")
    for r in range(config.count):
        rng = replicate_rng(config.seed, r)
        profile = vertical_profile(sample_conditioned(dist, n, rng), eta, rng)
        if quantity == "vertical":
            rows.extend([r, int(j), int(c)] for j, c in zip(profile.labels(), profile.counts))
        else:
            form = "t2b" if quantity == "normalized-t2b" else "t2a"
            values = normalized_profile(profile, g, xgrid, form=form)
            rows.extend([r, float(x), float(v)] for x, v in zip(xgrid, values))
    header = ["replicate", "j", "count"] if quantity == "vertical" else ["replicate", "x", "value"]
    logger.info("profiles written", extra={"quantity": quantity, "trees": config.count})
    report(config, header, rows, offspring=dist.name, eta=eta.name, gamma=g)
    return 0
