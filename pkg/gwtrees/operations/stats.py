"""
Per-tree statistics: level profile Z_k, pair counts P_k, ancestor-split
counts Y_{l,m}, root-path counts Q_k and Q'_k, and Monte Carlo means.
"""
import logging
from dataclasses import dataclass

import numpy as np

from gwtrees.config import settings
from gwtrees.exceptions import SizeGuardException, TreeTruncatedException, ValidationException
from gwtrees.operations.interface import TreeSource, TreeStatistic
from gwtrees.operations.models import EstimateRow, EstimateTable
from gwtrees.operations.offspring import OffspringDist
from gwtrees.operations.streams import master_seed, replicate_rng
from gwtrees.operations.trees import (
    ConditionedSource,
    Tree,
    UnconditionedSource,
    generation_sizes,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LevelProfile:
    z: np.ndarray


@dataclass(frozen=True)
class PairProfile:
    """p[k] = P_k for k = 1..n-1 (p[0] is 0); y[l, m] = Y_{l,m} up to the caps."""

    p: np.ndarray
    y: np.ndarray


@dataclass(frozen=True)
class RootPairCounts:
    """q[k] = Q_k and qp[k] = Q'_k; index 0 is unused."""

    q: np.ndarray
    qp: np.ndarray


def level_profile(tree: Tree) -> LevelProfile:
    return LevelProfile(z=np.bincount(tree.depth))


def pair_profile(tree: Tree, lcap: int | None = None, mcap: int | None = None) -> PairProfile:
    """
    Exact P_k for all k and Y_{l,m} for l <= lcap, m <= mcap.

    Vertices are processed children-first. At u, the depth profile of each
    child subtree is cross-convolved with the profile accumulated so far
    (which starts with u itself), giving all pairs whose last common
    ancestor is u. The deepest child is merged first.
    """
    lcap = settings.lcap if lcap is None else lcap
    mcap = settings.mcap if mcap is None else mcap
    n = tree.n
    p = np.zeros(n, dtype=np.int64)
    y = np.zeros((lcap + 1, mcap + 1), dtype=np.int64)
    y[0, 0] = n

    profiles: dict[int, np.ndarray] = {}
    for u in range(n - 1, -1, -1):
        kids = tree.children(u)
        if not kids:
            profiles[u] = np.ones(1, dtype=np.int64)
            continue
        kid_profiles = sorted((profiles.pop(c) for c in kids), key=len, reverse=True)
        acc = np.zeros(len(kid_profiles[0]) + 1, dtype=np.int64)
        acc[0] = 1
        acc_len = 1
        for prof in kid_profiles:
            length = len(prof)
            cur = acc[:acc_len]
            # vertex at depth a above, vertex at depth b in the child: distance a + b + 1
            conv = np.convolve(cur, prof)
            p[1:1 + len(conv)] += conv

            rows, cols = min(acc_len, lcap + 1), min(length, mcap)
            if rows and cols:
                y[:rows, 1:1 + cols] += np.outer(cur[:rows], prof[:cols])
            rows, cols = min(length, lcap), min(acc_len, mcap + 1)
            if rows and cols:
                y[1:1 + rows, :cols] += np.outer(prof[:rows], cur[:cols])

            acc[1:1 + length] += prof
            acc_len = max(acc_len, length + 1)
        profiles[u] = acc
    return PairProfile(p=p, y=y)


def ancestor_matrix(tree: Tree) -> np.ndarray:
    """a[v, u] is True when u is v or an ancestor of v."""
    n = tree.n
    a = np.zeros((n, n), dtype=bool)
    a[0, 0] = True
    for v in range(1, n):
        a[v] = a[tree.parent[v]]
        a[v, v] = True
    return a


def distance_matrix(tree: Tree) -> np.ndarray:
    """Graph distances by breadth-first search from every vertex."""
    n = tree.n
    parent = tree.parent[1:]
    dist = np.full((n, n), -1, dtype=np.int64)
    np.fill_diagonal(dist, 0)
    # row s is the search from source s
    frontier = np.eye(n, dtype=bool)
    step = 0
    while frontier.any():
        step += 1
        reached = np.zeros((n, n), dtype=bool)
        reached[:, 1:] = frontier[:, parent]
        # upward[u, s]: children of u in the frontier of s
        upward = np.zeros((n, n), dtype=np.int64)
        np.add.at(upward, parent, frontier.T[1:].astype(np.int64))
        reached |= upward.T > 0
        frontier = reached & (dist < 0)
        dist[frontier] = step
    return dist


def pair_profile_bruteforce(tree: Tree, lcap: int | None = None, mcap: int | None = None) -> PairProfile:
    """
    Same contract as pair_profile from all-pairs tables: breadth-first
    distances for P and common-ancestor counts for the last common
    ancestor in Y.
    """
    lcap = settings.lcap if lcap is None else lcap
    mcap = settings.mcap if mcap is None else mcap
    n = tree.n
    if n > settings.bruteforce_max_n:
        raise SizeGuardException("pair_profile_bruteforce", n, settings.bruteforce_max_n)

    dist = distance_matrix(tree)
    upper = np.triu_indices(n, k=1)
    p = np.bincount(dist[upper], minlength=n)[:n].astype(np.int64)

    a = ancestor_matrix(tree).astype(np.int64)
    lca_depth = a @ a.T - 1
    ell = tree.depth[:, None] - lca_depth
    m = tree.depth[None, :] - lca_depth
    keep = (ell <= lcap) & (m <= mcap)
    y = np.zeros((lcap + 1, mcap + 1), dtype=np.int64)
    np.add.at(y, (ell[keep], m[keep]), 1)
    return PairProfile(p=p, y=y)


def root_pair_counts(tree: Tree) -> RootPairCounts:
    """
    Q'_k from cross-convolutions of the root's child-subtree level profiles
    (pairs in different child subtrees, joined through the root); Q_k adds
    the pairs with the root as an endpoint, i.e. Z_k.
    """
    z = np.bincount(tree.depth)
    qp_parts: list[np.ndarray] = []
    acc = np.zeros(0, dtype=np.int64)
    for c in tree.children(0):
        end = c + int(tree.subtree_size[c])
        zc = np.bincount(tree.depth[c:end] - tree.depth[c])
        if len(acc):
            qp_parts.append(np.convolve(acc, zc))
        if len(zc) > len(acc):
            acc = np.concatenate([acc, np.zeros(len(zc) - len(acc), dtype=np.int64)])
        acc[:len(zc)] += zc
    longest = max([len(part) + 2 for part in qp_parts] + [len(z)])
    qp = np.zeros(longest, dtype=np.int64)
    for part in qp_parts:
        # Z_j(T_r) Z_i(T_s) contributes at distance j + i + 2
        qp[2:2 + len(part)] += part
    q = qp.copy()
    q[1:len(z)] += z[1:]
    return RootPairCounts(q=q, qp=qp)


def _stat_z(tree: Tree) -> np.ndarray:
    return level_profile(tree).z


def _stat_z2(tree: Tree) -> np.ndarray:
    return level_profile(tree).z.astype(np.float64) ** 2


def _stat_p(tree: Tree) -> np.ndarray:
    return pair_profile(tree, lcap=0, mcap=0).p


def _stat_q(tree: Tree) -> np.ndarray:
    return root_pair_counts(tree).q


def _stat_qprime(tree: Tree) -> np.ndarray:
    return root_pair_counts(tree).qp


def _stat_ydiag(tree: Tree) -> np.ndarray:
    return np.diagonal(pair_profile(tree).y).copy()


def _stat_size(tree: Tree) -> np.ndarray:
    return np.array([tree.n])


STATISTICS: dict[str, TreeStatistic] = {
    "Z": _stat_z,
    "Z2": _stat_z2,
    "P": _stat_p,
    "Q": _stat_q,
    "Qprime": _stat_qprime,
    "Ydiag": _stat_ydiag,
    "size": _stat_size,
}


def get_statistic(name: str) -> TreeStatistic:
    try:
        return STATISTICS[name]
    except KeyError:
        raise ValidationException(
            f"Unknown statistic '{name}'",
            details={"known": sorted(STATISTICS)},
        )


class _Accumulator:
    """Running per-index sums for mean and standard error."""

    def __init__(self):
        self.total = np.zeros(0)
        self.squares = np.zeros(0)
        self.count = 0

    def add(self, values: np.ndarray) -> None:
        values = np.asarray(values, dtype=np.float64)
        if len(values) > len(self.total):
            grow = len(values) - len(self.total)
            self.total = np.concatenate([self.total, np.zeros(grow)])
            self.squares = np.concatenate([self.squares, np.zeros(grow)])
        self.total[:len(values)] += values
        self.squares[:len(values)] += values ** 2
        self.count += 1

    def add_batch(self, values: np.ndarray) -> None:
        """values has shape (reps, indices)."""
        if values.shape[1] > len(self.total):
            grow = values.shape[1] - len(self.total)
            self.total = np.concatenate([self.total, np.zeros(grow)])
            self.squares = np.concatenate([self.squares, np.zeros(grow)])
        values = values.astype(np.float64)
        self.total[:values.shape[1]] += values.sum(axis=0)
        self.squares[:values.shape[1]] += (values ** 2).sum(axis=0)
        self.count += values.shape[0]

    def rows(self, first_index: int = 0) -> list[EstimateRow]:
        r = self.count
        mean = self.total / r
        var = np.maximum(self.squares - r * mean ** 2, 0.0) / (r - 1)
        stderr = np.sqrt(var / r)
        return [
            EstimateRow(index=i, mean=float(mean[i]), stderr=float(stderr[i]), reps=r)
            for i in range(first_index, len(mean))
        ]


def estimate_mean(
    statistic: str | TreeStatistic,
    source: TreeSource,
    reps: int,
    seed: int,
) -> EstimateTable:
    """
    Per-index sample mean and standard error of a statistic over ``reps``
    independent trees; replicate r uses the stream (seed, r).
    """
    if reps < 2:
        raise ValidationException("reps must be at least 2", details={"reps": reps})
    name = statistic if isinstance(statistic, str) else getattr(statistic, "__name__", "custom")
    stat = get_statistic(statistic) if isinstance(statistic, str) else statistic
    acc = _Accumulator()
    censored = 0
    for r in range(reps):
        try:
            tree = source.sample(replicate_rng(seed, r))
        except TreeTruncatedException:
            censored += 1
            continue
        acc.add(stat(tree))
    if censored:
        logger.warning("censored samples dropped", extra={"censored": censored, "source": source.label})
    if acc.count < 2:
        raise ValidationException("fewer than two uncensored samples", details={"censored": censored})
    return EstimateTable(source=source.label, statistic=name, reps=acc.count, censored=censored, rows=acc.rows())


def monte_carlo_mean(
    statistic: str | TreeStatistic,
    dist: OffspringDist,
    n: int | None,
    reps: int,
    rng: np.random.Generator,
    max_depth: int | None = None,
) -> EstimateTable:
    """
    Monte Carlo means over fresh T_n, or over the unconditioned tree when
    ``n`` is None (height-pruned at ``max_depth`` if given).
    """
    if n is None:
        source: TreeSource = UnconditionedSource(dist, max_depth=max_depth)
    else:
        source = ConditionedSource(dist, n)
    return estimate_mean(statistic, source, reps, master_seed(rng))


def estimate_root_pairs_unconditioned(
    dist: OffspringDist,
    kmax: int,
    reps: int,
    rng: np.random.Generator,
    batch_size: int | None = None,
) -> EstimateTable:
    """
    Vectorised estimate of E Q_k of the unconditioned tree for k = 1..kmax.

    Only levels <= kmax matter, so each replicate draws the root degree and
    the generation sizes of every child subtree down to depth kmax - 1.
    Pairs joined through the root are then counted as
    (sum_j S_j S_{k-2-j} - sum_r sum_j Z_j(r) Z_{k-2-j}(r)) / 2
    with S_j the summed child profiles.
    """
    if reps < 2:
        raise ValidationException("reps must be at least 2", details={"reps": reps})
    if kmax < 1:
        raise ValidationException("kmax must be at least 1", details={"kmax": kmax})
    batch_size = settings.batch_size if batch_size is None else batch_size
    acc = _Accumulator()
    done = 0
    while done < reps:
        b = min(batch_size, reps - done)
        roots = dist.sample(rng, b)
        owner = np.repeat(np.arange(b), roots)
        kids = generation_sizes(dist, np.ones(len(owner), dtype=np.int64), kmax - 1, rng)
        summed = np.zeros((b, kmax), dtype=np.int64)
        np.add.at(summed, owner, kids)

        q = np.zeros((b, kmax + 1), dtype=np.int64)
        q[:, 1:] = summed  # Z_k = S_{k-1}
        for k in range(2, kmax + 1):
            m = k - 2
            cross = (summed[:, :m + 1] * summed[:, m::-1]).sum(axis=1)
            own = np.zeros(b, dtype=np.int64)
            np.add.at(own, owner, (kids[:, :m + 1] * kids[:, m::-1]).sum(axis=1))
            q[:, k] += (cross - own) // 2
        acc.add_batch(q)
        done += b
        logger.debug("root pair batch", extra={"done": done, "reps": reps})
    return EstimateTable(
        source=f"GW[{dist.name}]",
        statistic="Q",
        reps=acc.count,
        rows=acc.rows(first_index=1),
    )
