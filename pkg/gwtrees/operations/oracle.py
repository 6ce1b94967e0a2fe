"""
Exhaustive enumeration of ordered trees, weighted by prod_v p_deg(v), as
ground truth for the conditioned expectations.
"""
import logging
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from gwtrees.config import settings
from gwtrees.exceptions import SizeGuardException, SpanMismatchException, ValidationException
from gwtrees.operations.interface import TreeStatistic
from gwtrees.operations.offspring import OffspringDist
from gwtrees.operations.stats import get_statistic
from gwtrees.operations.trees import Tree, from_lukasiewicz

logger = logging.getLogger(__name__)


def _check_enumerable(n: int) -> None:
    if n < 1:
        raise ValidationException("n must be at least 1", details={"n": n})
    if n > settings.enumeration_max_n:
        raise SizeGuardException("enumerate_trees", n, settings.enumeration_max_n)


def lukasiewicz_words(n: int) -> Iterator[tuple[int, ...]]:
    """All ballot sequences of length n, in lexicographic order."""
    word: list[int] = []

    def extend(walk: int, remaining: int) -> Iterator[tuple[int, ...]]:
        if remaining == 1:
            if walk == 0:
                yield (*word, 0)
            return
        # the walk must stay >= 0 and still be able to reach -1
        for d in range(max(0, 1 - walk), remaining - walk):
            word.append(d)
            yield from extend(walk + d - 1, remaining - 1)
            word.pop()

    yield from extend(0, n)


def enumerate_trees(n: int) -> Iterator[Tree]:
    """Every ordered rooted tree with n vertices, exactly once."""
    _check_enumerable(n)
    for word in lukasiewicz_words(n):
        yield from_lukasiewicz(word)


@dataclass(frozen=True)
class WeightedTreeSet:
    n: int
    trees: list[tuple[Tree, float]]
    total_weight: float


def weighted_trees(dist: OffspringDist, n: int) -> WeightedTreeSet:
    """Every tree of size n with its probability P(T = tree) under the law."""
    _check_enumerable(n)
    p = dist.probs(n - 1)
    trees = [(tree, float(np.prod(p[tree.degrees]))) for tree in enumerate_trees(n)]
    total = float(sum(w for _, w in trees))
    logger.debug("enumerated trees", extra={"n": n, "count": len(trees), "offspring": dist.name})
    return WeightedTreeSet(n=n, trees=trees, total_weight=total)


def exact_conditioned_expectation(
    dist: OffspringDist,
    n: int,
    statistic: str | TreeStatistic,
) -> np.ndarray:
    """
    E[stat(T_n)] per index as the weighted average over all trees of size n.

    The statistic may return arrays of varying shape (1-D or 2-D); they are
    zero-padded to a common shape.
    """
    stat = get_statistic(statistic) if isinstance(statistic, str) else statistic
    weighted = weighted_trees(dist, n)
    if weighted.total_weight <= 0:
        raise SpanMismatchException(n, dist.span, details={"offspring": dist.name})
    values = [(np.atleast_1d(np.asarray(stat(tree), dtype=float)), w) for tree, w in weighted.trees]
    shape = tuple(max(v.shape[i] for v, _ in values) for i in range(values[0][0].ndim))
    out = np.zeros(shape)
    for v, w in values:
        out[tuple(slice(0, s) for s in v.shape)] += w * v
    return out / weighted.total_weight
