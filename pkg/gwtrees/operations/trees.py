"""
Rooted ordered trees in depth-first array form, the Lukasiewicz encoding,
and samplers for the Galton-Watson tree and the conditioned tree T_n.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from gwtrees.config import settings
from gwtrees.exceptions import (
    BallotViolationException,
    InvalidVertexException,
    RejectionLimitException,
    SpanMismatchException,
    TreeTruncatedException,
    ValidationException,
)
from gwtrees.operations.offspring import OffspringDist

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Tree:
    """
    A rooted ordered tree with vertices numbered in depth-first order.

    The root is vertex 0 and ``parent[0] == -1``. The descendants of v are
    exactly the vertices v .. v + subtree_size[v] - 1.
    """

    degrees: np.ndarray
    parent: np.ndarray
    depth: np.ndarray
    subtree_size: np.ndarray
    _key: tuple[int, ...] = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "_key", tuple(int(d) for d in self.degrees))

    @property
    def n(self) -> int:
        return len(self.degrees)

    @property
    def height(self) -> int:
        return int(self.depth.max())

    def children(self, v: int) -> list[int]:
        out = []
        c = v + 1
        for _ in range(int(self.degrees[v])):
            out.append(c)
            c += int(self.subtree_size[c])
        return out

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Tree) and self._key == other._key

    def __hash__(self) -> int:
        return hash(self._key)


def from_lukasiewicz(degrees: Sequence[int]) -> Tree:
    """Decode a depth-first outdegree sequence into a tree."""
    degs = np.asarray(degrees, dtype=np.int64)
    n = len(degs)
    if n < 1:
        raise BallotViolationException("Empty degree sequence")
    if np.any(degs < 0):
        raise BallotViolationException("Degrees must be non-negative", details={"degrees": degs.tolist()})
    walk = np.cumsum(degs - 1)
    if walk[-1] != -1:
        raise BallotViolationException(
            f"Degrees must sum to n - 1 = {n - 1}, got {int(degs.sum())}",
            details={"n": n},
        )
    if n > 1 and walk[:-1].min() < 0:
        first = int(np.argmax(walk[:-1] < 0))
        raise BallotViolationException(
            "Prefix sum of (deg - 1) reaches -1 before the end",
            details={"position": first},
        )

    deg_list = degs.tolist()
    parent = [-1] * n
    depth = [0] * n
    remaining: list[int] = []
    stack: list[int] = []
    for v in range(n):
        if v:
            top = stack[-1]
            parent[v] = top
            depth[v] = depth[top] + 1
            remaining[-1] -= 1
            if remaining[-1] == 0:
                stack.pop()
                remaining.pop()
        if deg_list[v]:
            stack.append(v)
            remaining.append(deg_list[v])

    size = [1] * n
    for v in range(n - 1, 0, -1):
        size[parent[v]] += size[v]

    return Tree(
        degrees=degs,
        parent=np.asarray(parent, dtype=np.int64),
        depth=np.asarray(depth, dtype=np.int64),
        subtree_size=np.asarray(size, dtype=np.int64),
    )


def to_lukasiewicz(tree: Tree) -> tuple[int, ...]:
    return tree._key


def shape_key(tree: Tree) -> tuple[int, ...]:
    """Hashable key identifying the ordered shape."""
    return tree._key


def single_vertex() -> Tree:
    return from_lukasiewicz([0])


def check_size(dist: OffspringDist, n: int) -> None:
    if n < 1 or (n - 1) % dist.span:
        raise SpanMismatchException(n, dist.span, details={"offspring": dist.name})


def cycle_lemma_rotation(degrees: np.ndarray) -> np.ndarray:
    """
    The unique rotation of a sequence with sum(deg - 1) = -1 that is a
    Lukasiewicz word: start right after the first minimum of the walk.
    """
    walk = np.cumsum(degrees - 1)
    j = int(np.argmin(walk))
    rotated = np.roll(degrees, -(j + 1))
    check = np.cumsum(rotated - 1)
    assert check[-1] == -1 and (len(check) == 1 or check[:-1].min() >= 0), "cycle lemma rotation failed"
    return rotated


def sample_conditioned(
    dist: OffspringDist,
    n: int,
    rng: np.random.Generator,
    rejection_cap: int | None = None,
) -> Tree:
    """
    Draw T_n exactly: i.i.d. degrees conditioned on summing to n - 1,
    rotated into a Lukasiewicz word by the cycle lemma.
    """
    check_size(dist, n)
    cap = settings.rejection_cap if rejection_cap is None else rejection_cap
    if n == 1:
        return single_vertex()

    # acceptance probability is about span / (sigma sqrt(2 pi n))
    accept = dist.span / (dist.sigma * math.sqrt(2 * math.pi * n))
    batch = int(min(max(2.0 / accept, 1.0), max(1, 4_000_000 // n), cap))
    attempts = 0
    while attempts < cap:
        rows = min(batch, cap - attempts)
        draws = dist.sample(rng, (rows, n))
        attempts += rows
        hits = np.nonzero(draws.sum(axis=1) == n - 1)[0]
        if len(hits):
            attempts -= rows - 1 - int(hits[0])
            logger.debug("conditioned sample accepted", extra={"n": n, "attempts": attempts})
            return from_lukasiewicz(cycle_lemma_rotation(draws[hits[0]]))
    raise RejectionLimitException(n, attempts, details={"offspring": dist.name})


def _bfs_to_dfs(offspring: list[int]) -> list[int]:
    """Reorder breadth-first outdegrees into depth-first (Lukasiewicz) order."""
    first_child = [0] * len(offspring)
    nxt = 1
    for i, k in enumerate(offspring):
        first_child[i] = nxt
        nxt += k
    out = []
    stack = [0]
    while stack:
        v = stack.pop()
        k = offspring[v]
        out.append(k)
        start = first_child[v]
        stack.extend(range(start + k - 1, start - 1, -1))
    return out


def sample_unconditioned(
    dist: OffspringDist,
    rng: np.random.Generator,
    size_cap: int | None = None,
    max_depth: int | None = None,
) -> Tree:
    """
    Grow the Galton-Watson tree generation by generation.

    With ``max_depth`` the tree is pruned at that height: vertices at depth
    max_depth get no children.
    """
    cap = settings.size_cap if size_cap is None else size_cap
    if cap < 1:
        raise ValidationException("size_cap must be at least 1", details={"size_cap": cap})
    offspring: list[int] = []
    generation = 1
    total = 1
    level = 0
    while generation:
        if max_depth is not None and level == max_depth:
            offspring.extend([0] * generation)
            break
        kids = dist.sample(rng, generation)
        offspring.extend(kids.tolist())
        generation = int(kids.sum())
        total += generation
        level += 1
        if total > cap:
            logger.warning("unconditioned tree censored", extra={"size_cap": cap, "level": level})
            raise TreeTruncatedException(cap, details={"level": level})
    return from_lukasiewicz(_bfs_to_dfs(offspring))


def fringe_subtree(tree: Tree, v: int) -> Tree:
    """All descendants of v (including v), re-indexed from 0."""
    if not 0 <= v < tree.n:
        raise InvalidVertexException(v, tree.n)
    end = v + int(tree.subtree_size[v])
    parent = tree.parent[v:end] - v
    parent[0] = -1
    return Tree(
        degrees=tree.degrees[v:end].copy(),
        parent=parent,
        depth=tree.depth[v:end] - tree.depth[v],
        subtree_size=tree.subtree_size[v:end].copy(),
    )


def sample_fringe(dist: OffspringDist, n: int, rng: np.random.Generator) -> Tree:
    """The fringe subtree of T_n at a uniformly chosen vertex."""
    tree = sample_conditioned(dist, n, rng)
    return fringe_subtree(tree, int(rng.integers(tree.n)))


def generation_sizes(
    dist: OffspringDist,
    roots: np.ndarray,
    depth: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """
    Generation sizes Z_0..Z_depth of independent Galton-Watson processes
    started from ``roots`` individuals each; shape (len(roots), depth + 1).
    """
    roots = np.asarray(roots, dtype=np.int64)
    out = np.zeros((len(roots), depth + 1), dtype=np.int64)
    out[:, 0] = roots
    for j in range(depth):
        out[:, j + 1] = dist.sample_sum(rng, out[:, j])
    return out


class ConditionedSource:
    """Source of T_n."""

    def __init__(self, dist: OffspringDist, n: int):
        check_size(dist, n)
        self.dist = dist
        self.n = n

    @property
    def label(self) -> str:
        return f"T_{self.n}[{self.dist.name}]"

    def sample(self, rng: np.random.Generator) -> Tree:
        return sample_conditioned(self.dist, self.n, rng)


class UnconditionedSource:
    """Source of the (optionally height-pruned) Galton-Watson tree."""

    def __init__(self, dist: OffspringDist, size_cap: int | None = None, max_depth: int | None = None):
        self.dist = dist
        self.size_cap = size_cap
        self.max_depth = max_depth

    @property
    def label(self) -> str:
        return f"GW[{self.dist.name}]"

    def sample(self, rng: np.random.Generator) -> Tree:
        return sample_unconditioned(self.dist, rng, self.size_cap, self.max_depth)


class FringeSource:
    """Source of the fringe subtree of T_n at a uniform vertex."""

    def __init__(self, dist: OffspringDist, n: int):
        check_size(dist, n)
        self.dist = dist
        self.n = n

    @property
    def label(self) -> str:
        return f"fringe(T_{self.n})[{self.dist.name}]"

    def sample(self, rng: np.random.Generator) -> Tree:
        return sample_fringe(self.dist, self.n, rng)
