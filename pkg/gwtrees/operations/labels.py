"""
Random edge labellings, vertical profiles X(j; T_n), the characteristic
function statistic Psi(n, t) and the normalised profile.
"""
import logging
import math
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict

from gwtrees.config import settings
from gwtrees.exceptions import InvalidDistributionException, ValidationException
from gwtrees.operations.models import PsiEstimate
from gwtrees.operations.offspring import OffspringDist
from gwtrees.operations.series import eval_hn
from gwtrees.operations.streams import master_seed, replicate_rng
from gwtrees.operations.trees import Tree, sample_conditioned

logger = logging.getLogger(__name__)

DisplacementKind = Literal["uniform_pm1", "uniform_3", "custom_finite", "fixed"]

_GRID_POINTS = 4096
# |1 - phi(t)| / t^2 at or below this on the grid counts as phi(t) = 1
_CURVATURE_FLOOR = 1e-9


class DisplacementDist(BaseModel):
    """An integer-valued displacement law eta with mean 0 and finite positive variance."""

    model_config = ConfigDict(frozen=True)

    name: str
    kind: DisplacementKind
    support: tuple[int, ...]
    weights: tuple[float, ...]
    mean: float
    variance: float

    @property
    def sigma(self) -> float:
        return math.sqrt(self.variance)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.kind == "fixed":
            return np.full(size, self.support[0], dtype=np.int64)
        return rng.choice(np.asarray(self.support, dtype=np.int64), size=size, p=np.asarray(self.weights))

    def __str__(self) -> str:
        return self.name


def characteristic(eta: DisplacementDist, t: float | np.ndarray) -> complex | np.ndarray:
    """phi_eta(t) = E exp(i t eta)."""
    t_arr = np.asarray(t, dtype=float)
    values = np.exp(1j * np.multiply.outer(t_arr, np.asarray(eta.support, dtype=float))) @ np.asarray(eta.weights)
    return complex(values) if values.ndim == 0 else values


def min_curvature(eta: DisplacementDist, points: int = _GRID_POINTS) -> float:
    """min over 0 < t <= pi of |1 - phi_eta(t)| / t^2."""
    t = np.linspace(math.pi / points, math.pi, points)
    return float(np.min(np.abs(1.0 - characteristic(eta, t)) / t ** 2))


def _displacement(name: str, kind: DisplacementKind, support: Sequence[int], weights: Sequence[float]) -> DisplacementDist:
    w = np.asarray(weights, dtype=float)
    if len(w) == 0 or np.any(w < 0) or not np.all(np.isfinite(w)) or w.sum() <= 0:
        raise InvalidDistributionException(
            "Displacement weights must be finite, non-negative and not all zero",
            details={"spec": name},
        )
    w = w / w.sum()
    s = np.asarray(support, dtype=float)
    mean = float(s @ w)
    variance = float((s ** 2) @ w) - mean ** 2
    if abs(mean) > settings.normalization_tol:
        raise InvalidDistributionException(f"Displacement law must have mean 0, got {mean:.6g}", details={"spec": name})
    if variance <= 0:
        raise InvalidDistributionException("Displacement law must have positive variance", details={"spec": name})
    eta = DisplacementDist(
        name=name,
        kind=kind,
        support=tuple(int(j) for j in support),
        weights=tuple(float(x) for x in w),
        mean=mean,
        variance=variance,
    )
    if min_curvature(eta) <= _CURVATURE_FLOOR:
        raise InvalidDistributionException(
            "Displacement law has phi(t) = 1 for some 0 < |t| <= pi",
            details={"spec": name},
        )
    return eta


def make_displacement(spec: str) -> DisplacementDist:
    """
    Parse a displacement spec: ``pm1`` (uniform on {-1, 1}), ``uniform3``
    (uniform on {-1, 0, 1}) or ``custom:j0:w0,j1:w1,...``.

    Laws are admitted when phi(t) != 1 for 0 < |t| <= pi, which is weaker
    than span 1: ``pm1`` lives on the lattice -1 + 2Z (span 2) and passes,
    since phi(pi) = -1.
    """
    spec = spec.strip()
    head, _, arg = spec.partition(":")
    head = head.lower()
    if head in ("pm1", "uniform_pm1") and not arg:
        return _displacement("pm1", "uniform_pm1", [-1, 1], [0.5, 0.5])
    if head in ("uniform3", "uniform_3") and not arg:
        return _displacement("uniform3", "uniform_3", [-1, 0, 1], [1 / 3, 1 / 3, 1 / 3])
    if head == "custom":
        support: list[int] = []
        weights: list[float] = []
        try:
            for item in arg.split(","):
                if not item.strip():
                    continue
                j, w = item.split(":")
                support.append(int(j))
                weights.append(float(w))
        except ValueError:
            raise InvalidDistributionException(
                "custom displacement needs value:weight pairs, e.g. custom:-1:0.5,1:0.5",
                details={"spec": spec},
            )
        return _displacement(spec, "custom_finite", support, weights)
    raise InvalidDistributionException(f"Unknown displacement law '{spec}'", details={"spec": spec})


def fixed_displacement(value: int) -> DisplacementDist:
    """Degenerate eta == value. Not a valid law; for exact-label tests only."""
    return DisplacementDist(
        name=f"fixed:{value}",
        kind="fixed",
        support=(value,),
        weights=(1.0,),
        mean=float(value),
        variance=0.0,
    )


def gamma(dist: OffspringDist, eta: DisplacementDist) -> float:
    return dist.sigma ** 0.5 / eta.sigma


@dataclass(frozen=True)
class VerticalProfile:
    """counts[i] = X(offset + i; tree)."""

    counts: np.ndarray
    offset: int
    n: int

    def count(self, j: int) -> int:
        i = j - self.offset
        return int(self.counts[i]) if 0 <= i < len(self.counts) else 0

    def as_dict(self) -> dict[int, int]:
        return {self.offset + i: int(c) for i, c in enumerate(self.counts) if c}

    def labels(self) -> np.ndarray:
        return np.arange(self.offset, self.offset + len(self.counts))


def vertex_labels(tree: Tree, eta: DisplacementDist, rng: np.random.Generator) -> np.ndarray:
    """
    L_v: sum of the edge displacements on the path from the root to v.

    The edge into v shifts every label in v's subtree, which is the
    contiguous block v .. v + subtree_size[v] - 1.
    """
    n = tree.n
    steps = eta.sample(rng, n - 1)
    diff = np.zeros(n + 1, dtype=np.int64)
    v = np.arange(1, n)
    np.add.at(diff, v, steps)
    np.add.at(diff, v + tree.subtree_size[1:], -steps)
    return np.cumsum(diff[:n])


def vertical_profile(tree: Tree, eta: DisplacementDist, rng: np.random.Generator) -> VerticalProfile:
    labels = vertex_labels(tree, eta, rng)
    low = int(labels.min())
    return VerticalProfile(counts=np.bincount(labels - low), offset=low, n=tree.n)


def _interpolate(profile: VerticalProfile, s: np.ndarray) -> np.ndarray:
    """X_n(s): linear interpolation between integers, zero outside the support."""
    js = np.arange(profile.offset - 1, profile.offset + len(profile.counts) + 1)
    counts = np.concatenate([[0], profile.counts, [0]]).astype(float)
    return np.interp(s, js, counts, left=0.0, right=0.0)


def normalized_profile(
    profile: VerticalProfile,
    gamma: float,
    xgrid: np.ndarray,
    form: Literal["t2a", "t2b"] = "t2a",
) -> np.ndarray:
    """
    ``t2a``: (1/n) g n^(1/4) X_n(g n^(1/4) x) with g = 1/gamma, a probability
    density in x. ``t2b``: n^(-3/4) X_n(n^(1/4) x), without the gamma scaling.
    """
    xgrid = np.asarray(xgrid, dtype=float)
    n = profile.n
    scale = n ** 0.25 / gamma if form == "t2a" else n ** 0.25
    return scale / n * _interpolate(profile, scale * xgrid)


def profile_at(profile: VerticalProfile, gamma: float, x: float) -> float:
    """Point value g n^(-3/4) X(j_n; T_n) with j_n = round(g n^(1/4) x), g = 1/gamma."""
    n = profile.n
    scale = n ** 0.25 / gamma
    return scale / n * profile.count(int(round(scale * x)))


def psi_sweep(
    dist: OffspringDist,
    eta: DisplacementDist,
    n: int,
    ts: Sequence[float],
    reps: int,
    seed: int,
) -> list[PsiEstimate]:
    """
    Psi(n, t) for every t from the same replicates: |n^-1 sum_v exp(i t L_v)|^2
    averaged over fresh (T_n, labelling) pairs; replicate r uses stream (seed, r).
    """
    if reps < 2:
        raise ValidationException("reps must be at least 2", details={"reps": reps})
    ts = np.asarray(ts, dtype=float)
    if np.any(np.abs(ts) > math.pi):
        raise ValidationException("t must lie in [-pi, pi]", details={"t": ts.tolist()})
    values = np.zeros((reps, len(ts)))
    for r in range(reps):
        rng = replicate_rng(seed, r)
        tree = sample_conditioned(dist, n, rng)
        profile = vertical_profile(tree, eta, rng)
        phases = np.exp(1j * np.multiply.outer(ts, profile.labels().astype(float)))
        values[r] = np.abs(phases @ profile.counts / n) ** 2
    logger.debug("psi sweep done", extra={"n": n, "reps": reps})
    mean = values.mean(axis=0)
    stderr = values.std(axis=0, ddof=1) / math.sqrt(reps)
    return [
        PsiEstimate(n=n, t=float(t), psi=float(m), stderr=float(s), reps=reps)
        for t, m, s in zip(ts, mean, stderr)
    ]


def psi_estimate(
    dist: OffspringDist,
    eta: DisplacementDist,
    n: int,
    t: float,
    reps: int,
    rng: np.random.Generator,
) -> PsiEstimate:
    return psi_sweep(dist, eta, n, [t], reps, master_seed(rng))[0]


def exact_psi(dist: OffspringDist, eta: DisplacementDist, n: int, t: float) -> float:
    """Psi(n, t) = h_n(phi(t), conj phi(t)) / n^2."""
    phi = characteristic(eta, t)
    return float(eval_hn(dist, n, phi, phi.conjugate()).real / n ** 2)
