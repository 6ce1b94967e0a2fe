"""`sample`: random trees as Lukasiewicz CSV, or Monte Carlo estimate tables."""
import argparse
import logging

from gwtrees.commands import add_common_arguments, offspring_spec, only, report, sizes
from gwtrees.exceptions import TreeTruncatedException, ValidationException
from gwtrees.operations.interface import TreeSource
from gwtrees.operations.models import RunConfig
from gwtrees.operations.offspring import make_offspring
from gwtrees.operations.stats import estimate_mean
from gwtrees.operations.streams import replicate_rng
from gwtrees.operations.trees import ConditionedSource, FringeSource, UnconditionedSource
from gwtrees.reports.lukasiewicz import write_trees
from gwtrees.reports.writer import build_meta

logger = logging.getLogger(__name__)


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("sample", help="sample trees or estimate statistics")
    add_common_arguments(parser)
    parser.add_argument("--source", choices=["conditioned", "unconditioned", "fringe"])
    parser.add_argument("--count", type=int, help="number of trees to write")
    parser.add_argument("--max-depth", type=int, help="prune unconditioned trees at this height")
    parser.add_argument("--statistic", help="estimate this statistic instead of writing trees")
    parser.add_argument("--reps", type=int, help="replicates for --statistic")
    parser.set_defaults(handler=handle_sample)


def _source(config: RunConfig) -> TreeSource:
    dist = make_offspring(offspring_spec(config))
    if config.source == "unconditioned":
        return UnconditionedSource(dist, max_depth=config.max_depth)
    n = only(sizes(config), "--n")
    if config.source == "fringe":
        return FringeSource(dist, n)
    return ConditionedSource(dist, n)


def _trees(source: TreeSource, config: RunConfig):
    for r in range(config.count):
        try:
            yield source.sample(replicate_rng(config.seed, r))
        except TreeTruncatedException:
            logger.warning("skipping censored tree", extra={"replicate": r})


def handle_sample(config: RunConfig) -> int:
    source = _source(config)
    if config.statistic is None:
        count = write_trees(_trees(source, config), config.out, build_meta(config, source=source.label))
        logger.info("sampled trees", extra={"count": count, "source": source.label})
        return 0
    if config.reps is None:
        raise ValidationException("--statistic needs --reps")
    table = estimate_mean(config.statistic, source, config.reps, config.seed)
    rows = [[r.index, r.mean, r.stderr, r.reps] for r in table.rows]
    report(config, ["index", "mean", "stderr", "reps"], rows, source=table.source, censored=table.censored)
    return 0

