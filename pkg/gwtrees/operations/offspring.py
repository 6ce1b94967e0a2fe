"""
Critical offspring laws: parsing of distribution specs, lazily materialised
weights, probability generating functions and samplers.
"""
import cmath
import logging
import math
from functools import reduce
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict
from scipy.stats import poisson

from gwtrees.config import settings
from gwtrees.exceptions import (
    InvalidDistributionException,
    NonCriticalDistributionException,
    OutOfDomainException,
)

logger = logging.getLogger(__name__)

OffspringKind = Literal["geometric_half", "poisson_1", "binary_02", "d_ary", "custom_finite"]

# Slack allowed on |w| <= 1 so that points of the unit circle survive rounding.
_DISC_SLACK = 1e-12


class OffspringDist(BaseModel):
    """
    A critical offspring law xi with 0 < Var xi < infinity.

    Finite laws keep their weights in ``weights``; the geometric and Poisson
    laws have infinite support and materialise weights on demand.
    """

    model_config = ConfigDict(frozen=True)

    name: str
    kind: OffspringKind
    weights: tuple[float, ...] = ()
    d: int = 1
    mean: float
    variance: float
    span: int

    @property
    def sigma(self) -> float:
        return math.sqrt(self.variance)

    @property
    def finite(self) -> bool:
        return self.kind not in ("geometric_half", "poisson_1")

    def probs(self, upto: int) -> np.ndarray:
        """Weights p_0..p_upto (zero-padded for finite laws)."""
        k = np.arange(upto + 1)
        if self.kind == "geometric_half":
            return np.ldexp(1.0, -(k + 1))
        if self.kind == "poisson_1":
            return poisson.pmf(k, 1.0)
        out = np.zeros(upto + 1)
        m = min(upto + 1, len(self.weights))
        out[:m] = self.weights[:m]
        return out

    def tail_mass(self, upto: int) -> float:
        """P(xi > upto)."""
        if self.kind == "geometric_half":
            return math.ldexp(1.0, -(upto + 1))
        if self.kind == "poisson_1":
            return float(poisson.sf(upto, 1.0))
        return float(sum(self.weights[upto + 1:]))

    def support_cutoff(self, tol: float | None = None) -> int:
        """
        Smallest K such that sum_{k>K} (k+1)^2 p_k < tol.

        Truncating the weights at K then perturbs Phi, Phi' and Phi'' by less
        than tol anywhere on the closed unit disc.
        """
        tol = settings.tail_mass_tol if tol is None else tol
        if self.finite:
            return len(self.weights) - 1
        upto = 64
        while self.tail_mass(upto) > tol * 1e-6:
            upto *= 2
        p = self.probs(upto)
        weighted = (np.arange(upto + 1) + 1.0) ** 2 * p
        tails = np.cumsum(weighted[::-1])[::-1]
        # tails[K] = sum_{k >= K}; we want the first K with sum_{k > K} < tol
        below = np.nonzero(tails < tol)[0]
        return int(below[0]) if len(below) else upto

    def support_values(self) -> np.ndarray:
        return np.arange(len(self.weights))

    def sample(self, rng: np.random.Generator, size: int | tuple[int, ...]) -> np.ndarray:
        """I.i.d. draws of xi."""
        if self.kind == "geometric_half":
            return rng.geometric(0.5, size=size) - 1
        if self.kind == "poisson_1":
            return rng.poisson(1.0, size=size)
        return rng.choice(len(self.weights), size=size, p=np.asarray(self.weights))

    def sample_sum(self, rng: np.random.Generator, counts: np.ndarray) -> np.ndarray:
        """For each m in counts, one draw of S_m = xi_1 + ... + xi_m."""
        counts = np.asarray(counts, dtype=np.int64)
        if self.kind == "geometric_half":
            draws = rng.negative_binomial(np.maximum(counts, 1), 0.5)
            return np.where(counts > 0, draws, 0)
        if self.kind == "poisson_1":
            return rng.poisson(counts.astype(float))
        if self.kind in ("binary_02", "d_ary"):
            return self.d * rng.binomial(counts, 1.0 / self.d)
        cells = rng.multinomial(counts, np.asarray(self.weights))
        return cells @ self.support_values()

    def __str__(self) -> str:
        return self.name


def _finite_law(name: str, kind: OffspringKind, weights: list[float], d: int = 1) -> OffspringDist:
    w = np.asarray(weights, dtype=float)
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise InvalidDistributionException(
            "Offspring weights must be finite and non-negative",
            details={"spec": name, "weights": list(weights)},
        )
    total = float(w.sum())
    if total <= 0:
        raise InvalidDistributionException("Offspring weights sum to zero", details={"spec": name})
    w = w / total
    # drop trailing zeros so the support is tight
    nz = np.nonzero(w)[0]
    w = w[: nz[-1] + 1]
    k = np.arange(len(w))
    mean = float(k @ w)
    if abs(mean - 1.0) > settings.criticality_tol:
        raise NonCriticalDistributionException(mean, details={"spec": name})
    if w[0] <= 0 or (len(w) > 1 and w[1] >= 1.0):
        raise InvalidDistributionException(
            "Offspring law needs p_0 > 0 and p_1 < 1",
            details={"spec": name},
        )
    variance = float((k ** 2) @ w) - mean ** 2
    support = [int(i) for i in np.nonzero(w)[0] if i > 0]
    span = reduce(math.gcd, support, 0) or 1
    return OffspringDist(
        name=name,
        kind=kind,
        weights=tuple(float(x) for x in w),
        d=d,
        mean=mean,
        variance=variance,
        span=span,
    )


def make_offspring(spec: str) -> OffspringDist:
    """
    Parse a distribution spec.

    Accepted forms: ``geometric``, ``poisson``, ``binary``, ``d-ary:<d>`` and
    ``custom:p0,p1,...`` (normalised, then required to have mean 1).
    """
    spec = spec.strip()
    head, _, arg = spec.partition(":")
    head = head.lower()

    if head == "geometric" and not arg:
        return OffspringDist(name="geometric", kind="geometric_half", mean=1.0, variance=2.0, span=1)
    if head == "poisson" and not arg:
        return OffspringDist(name="poisson", kind="poisson_1", mean=1.0, variance=1.0, span=1)
    if head == "binary" and not arg:
        return _finite_law("binary", "binary_02", [0.5, 0.0, 0.5], d=2)
    if head == "d-ary":
        try:
            d = int(arg)
        except ValueError:
            raise InvalidDistributionException(
                "d-ary spec needs an integer arity, e.g. d-ary:3",
                details={"spec": spec},
            )
        if d < 2:
            raise InvalidDistributionException("d-ary arity must be at least 2", details={"spec": spec})
        weights = [0.0] * (d + 1)
        weights[0] = 1.0 - 1.0 / d
        weights[d] = 1.0 / d
        return _finite_law(f"d-ary:{d}", "d_ary", weights, d=d)
    if head == "custom":
        try:
            weights = [float(x) for x in arg.split(",") if x.strip()]
        except ValueError:
            raise InvalidDistributionException(
                "custom spec needs comma-separated weights, e.g. custom:0.25,0.5,0.25",
                details={"spec": spec},
            )
        if not weights:
            raise InvalidDistributionException("custom spec has no weights", details={"spec": spec})
        return _finite_law(spec, "custom_finite", weights)

    raise InvalidDistributionException(f"Unknown offspring distribution '{spec}'", details={"spec": spec})


def pgf(dist: OffspringDist, w: complex, order: int = 0) -> complex:
    """Phi(w), Phi'(w) or Phi''(w) for |w| <= 1."""
    if order not in (0, 1, 2):
        raise OutOfDomainException(f"pgf order must be 0, 1 or 2, got {order}")
    if abs(w) > 1.0 + _DISC_SLACK:
        raise OutOfDomainException(
            f"pgf is only evaluated on the closed unit disc, got |w| = {abs(w):.6g}",
            details={"w": str(w)},
        )
    if dist.kind == "geometric_half":
        # Phi(w) = 1/(2-w); Phi^(j)(w) = j!/(2-w)^(j+1)
        return math.factorial(order) / (2 - w) ** (order + 1)
    if dist.kind == "poisson_1":
        return cmath.exp(w - 1) if isinstance(w, complex) else math.exp(w - 1)
    coeffs = np.polynomial.polynomial.polyder(np.asarray(dist.weights), order) if order else np.asarray(dist.weights)
    value = np.polynomial.polynomial.polyval(w, coeffs)
    return complex(value) if isinstance(w, complex) else float(value)
