"""
Exact engine for conditioned Galton-Watson trees.

F(z) = E z^|T| solves F = z Phi(F); A(z) = z Phi'(F(z)); D = 1/(1 - A).
Coefficient extraction from the generating functions

    G(z, x) = F / (1 - x A)
    H(z, x, y) = (x y z Phi''(F) G(z,x) G(z,y) + A (x G(z,x) + y G(z,y)) + F) / (1 - A)

gives, with q_n = [z^n] F = P(|T| = n):

    q_n E Z_k(T_n)     = [z^n] F A^k
    q_n E Y_{l,m}(T_n) = [z^n] D z Phi''(F) F^2 A^(l+m-2)     (l, m >= 1)
                       = [z^n] D F A^(l+m)                    (exactly one of l, m zero)
                       = [z^n] D F                            (l = m = 0)
    q_n E P_k(T_n)     = [z^n] D ((k-1) z Phi''(F) F^2 A^(k-2) + 2 F A^k) / 2
    q_n E Q_k(T_n)     = [z^n] (F A^k + (k-1)/2 z Phi''(F) F^2 A^(k-2))
"""
import cmath
import logging
import math
import threading
from dataclasses import dataclass
from typing import Callable, Literal

import numpy as np
from scipy.optimize import brentq

from gwtrees.config import settings
from gwtrees.exceptions import OutOfDomainException, SpanMismatchException, ValidationException
from gwtrees.operations.models import FnPolynomial
from gwtrees.operations.offspring import OffspringDist, pgf
from gwtrees.operations.power_series import TruncatedSeries
from gwtrees.operations.trees import check_size

logger = logging.getLogger(__name__)

Method = Literal["lagrange", "newton"]


def compose_pgf(dist: OffspringDist, inner: TruncatedSeries, order: int = 0) -> TruncatedSeries:
    """Phi^(order)(inner) as a truncated series."""
    if dist.kind == "geometric_half":
        # Phi^(j)(w) = j! (2 - w)^-(j+1)
        return math.factorial(order) * (2.0 - inner).reciprocal() ** (order + 1)
    if dist.kind == "poisson_1":
        return (inner - 1.0).exp()
    weights = np.asarray(dist.weights)
    poly = np.polynomial.polynomial.polyder(weights, order) if order else weights
    if len(poly) == 0:
        return TruncatedSeries.constant(0.0, inner.N)
    return inner.compose_polynomial(poly)


def lagrange_coefficients(dist: OffspringDist, N: int) -> np.ndarray:
    """
    [z^n] F = (1/n) [t^(n-1)] Phi(t)^n for n = 0..N, with Phi^n built by
    repeated convolution of the weights truncated below the tail tolerance.
    """
    out = np.zeros(N + 1)
    if N < 1:
        return out
    cutoff = min(dist.support_cutoff(), N)
    p = dist.probs(cutoff)
    power = np.ones(1)
    for n in range(1, N + 1):
        power = np.convolve(power, p)[:N]
        if n - 1 < len(power):
            out[n] = power[n - 1] / n
    return out


def _solve_newton(dist: OffspringDist, N: int) -> TruncatedSeries:
    """F = z Phi(F) by Newton iteration; each step doubles the correct degree."""
    z = TruncatedSeries.variable(N)
    F = z * float(dist.probs(0)[0])
    correct = 2
    while True:
        residual = F - compose_pgf(dist, F, 0).shift(1)
        slope = 1.0 - compose_pgf(dist, F, 1).shift(1)
        F = F - residual / slope
        if correct > N:
            return F
        correct *= 2


def series_F(dist: OffspringDist, N: int, method: Method = "lagrange") -> TruncatedSeries:
    """F(z) = E z^|T| to degree N."""
    if N < 1:
        raise ValidationException("series degree N must be at least 1", details={"N": N})
    if method == "newton":
        return _solve_newton(dist, N)
    return _bundle(dist, N).F


def series_A(dist: OffspringDist, N: int) -> TruncatedSeries:
    """A(z) = z Phi'(F(z)) to degree N."""
    if N < 1:
        raise ValidationException("series degree N must be at least 1", details={"N": N})
    return _bundle(dist, N).A


@dataclass(frozen=True)
class _Bundle:
    F: TruncatedSeries
    A: TruncatedSeries
    curvature: TruncatedSeries  # z Phi''(F) F^2


@dataclass(frozen=True)
class CoefficientTables:
    """
    Row k holds the coefficients of F A^k, D F A^k, z Phi''(F) F^2 A^k and
    D z Phi''(F) F^2 A^k, for k = 0..kmax, degrees 0..N.
    """

    N: int
    kmax: int
    F: np.ndarray
    fa: np.ndarray
    dfa: np.ndarray
    hz: np.ndarray
    dh: np.ndarray


@dataclass(frozen=True)
class CoefficientColumn:
    """[z^n] of the four families of CoefficientTables, for k = 0..kmax."""

    n: int
    kmax: int
    qn: float
    fa: np.ndarray
    dfa: np.ndarray
    hz: np.ndarray
    dh: np.ndarray


_FAMILIES = ("fa", "dfa", "hz", "dh")


def _table_cells(N: int, kmax: int) -> int:
    return len(_FAMILIES) * (kmax + 1) * (N + 1)


def _first_members(bundle: _Bundle, N: int) -> dict[str, TruncatedSeries]:
    """The k = 0 member of each family, truncated at degree N."""
    F = bundle.F.truncate(N)
    D = (1.0 - bundle.A.truncate(N)).reciprocal()
    curvature = bundle.curvature.truncate(N)
    return {"fa": F, "dfa": D * F, "hz": curvature, "dh": D * curvature}


def _multiply_out(
    first: dict[str, TruncatedSeries],
    A: TruncatedSeries,
    count: int,
    take: Callable[[TruncatedSeries], np.ndarray | float],
) -> dict[str, np.ndarray]:
    """take(member * A^k) for k = 0..count-1, stacked per family."""
    rows: dict[str, list] = {name: [] for name in first}
    current = dict(first)
    for k in range(count):
        for name, series in current.items():
            rows[name].append(take(series))
        if k < count - 1:
            current = {name: series * A for name, series in current.items()}
    return {name: np.array(values) for name, values in rows.items()}


class _SeriesCache:
    """
    Read-mostly cache keyed by distribution name. Each law keeps one bundle
    and one coefficient table, both grown to cover every request so far;
    a table that only needs more rows is extended, not rebuilt.
    """

    def __init__(self):
        self._lock = threading.Lock()
        self._bundles: dict[str, _Bundle] = {}
        self._tables: dict[str, CoefficientTables] = {}
        self._columns: dict[tuple[str, int], CoefficientColumn] = {}

    def bundle(self, dist: OffspringDist, N: int) -> _Bundle:
        cached = self._bundles.get(dist.name)
        if cached is not None and cached.F.N >= N:
            return cached
        with self._lock:
            cached = self._bundles.get(dist.name)
            if cached is not None and cached.F.N >= N:
                return cached
            logger.info("computing F and A", extra={"offspring": dist.name, "N": N})
            F = TruncatedSeries(lagrange_coefficients(dist, N))
            A = compose_pgf(dist, F, 1).shift(1)
            curvature = (compose_pgf(dist, F, 2) * F * F).shift(1)
            bundle = _Bundle(F=F, A=A, curvature=curvature)
            self._bundles[dist.name] = bundle
            return bundle

    def covering(self, name: str, N: int, kmax: int) -> CoefficientTables | None:
        entry = self._tables.get(name)
        if entry is not None and entry.N >= N and entry.kmax >= kmax:
            return entry
        return None

    def tables(self, dist: OffspringDist, N: int, kmax: int) -> CoefficientTables:
        cached = self.covering(dist.name, N, kmax)
        if cached is not None:
            return cached
        current = self._tables.get(dist.name)
        N = max(N, current.N if current else 0)
        kmax = max(kmax, current.kmax if current else 0)
        bundle = self.bundle(dist, N)
        with self._lock:
            cached = self.covering(dist.name, N, kmax)
            if cached is not None:
                return cached
            current = self._tables.get(dist.name)
            if current is not None and current.N == N:
                tables = self._extend(current, bundle, kmax)
            else:
                tables = self._build(dist.name, bundle, N, kmax)
            self._tables[dist.name] = tables
            return tables

    @staticmethod
    def _build(name: str, bundle: _Bundle, N: int, kmax: int) -> CoefficientTables:
        logger.info("computing coefficient tables", extra={"offspring": name, "N": N, "kmax": kmax})
        A = bundle.A.truncate(N)
        rows = _multiply_out(_first_members(bundle, N), A, kmax + 1, lambda s: s.coeffs)
        return CoefficientTables(N=N, kmax=kmax, F=bundle.F.truncate(N).coefficients(), **rows)

    @staticmethod
    def _extend(tables: CoefficientTables, bundle: _Bundle, kmax: int) -> CoefficientTables:
        logger.info("extending coefficient tables", extra={"N": tables.N, "from": tables.kmax, "to": kmax})
        A = bundle.A.truncate(tables.N)
        following = {name: TruncatedSeries(getattr(tables, name)[-1]) * A for name in _FAMILIES}
        extra = _multiply_out(following, A, kmax - tables.kmax, lambda s: s.coeffs)
        rows = {name: np.vstack([getattr(tables, name), extra[name]]) for name in _FAMILIES}
        return CoefficientTables(N=tables.N, kmax=kmax, F=tables.F, **rows)

    def column(self, dist: OffspringDist, n: int, kmax: int) -> CoefficientColumn:
        """
        The column n of the tables. Served from the cached table when one
        covers it or fits the cell budget, otherwise computed on its own.
        """
        covering = self.covering(dist.name, n, kmax)
        current = self._tables.get(dist.name)
        envelope = _table_cells(max(n, current.N if current else 0), max(kmax, current.kmax if current else 0))
        if covering is None and envelope <= settings.table_max_cells:
            covering = self.tables(dist, n, kmax)
        if covering is not None:
            return CoefficientColumn(
                n=n, kmax=covering.kmax, qn=float(covering.F[n]),
                **{name: getattr(covering, name)[:, n] for name in _FAMILIES},
            )

        cached = self._columns.get((dist.name, n))
        if cached is not None and cached.kmax >= kmax:
            return cached
        bundle = self.bundle(dist, n)
        logger.info("computing coefficient column", extra={"offspring": dist.name, "n": n, "kmax": kmax})
        values = _multiply_out(_first_members(bundle, n), bundle.A.truncate(n), kmax + 1, lambda s: s.coeffs[n])
        column = CoefficientColumn(n=n, kmax=kmax, qn=float(bundle.F[n]), **values)
        with self._lock:
            self._columns[(dist.name, n)] = column
        return column

    def info(self) -> dict[str, tuple[int, int]]:
        return {name: (tables.N, tables.kmax) for name, tables in self._tables.items()}

    def clear(self) -> None:
        with self._lock:
            self._bundles.clear()
            self._tables.clear()
            self._columns.clear()


_cache = _SeriesCache()


def _bundle(dist: OffspringDist, N: int) -> _Bundle:
    return _cache.bundle(dist, N)


def coefficient_tables(dist: OffspringDist, N: int, kmax: int) -> CoefficientTables:
    return _cache.tables(dist, N, kmax)


def cache_info() -> dict[str, tuple[int, int]]:
    """(N, kmax) of the cached table per distribution name."""
    return _cache.info()


def clear_cache() -> None:
    _cache.clear()


def _column_for(dist: OffspringDist, n: int, kmax: int) -> CoefficientColumn:
    check_size(dist, n)
    column = _cache.column(dist, n, max(kmax, 0))
    if column.qn <= 0:
        raise SpanMismatchException(n, dist.span, details={"offspring": dist.name})
    return column


def exact_mean_Z(dist: OffspringDist, n: int, k: int) -> float:
    """E Z_k(T_n)."""
    if k < 0:
        raise ValidationException("level k must be non-negative", details={"k": k})
    if k >= n:
        check_size(dist, n)
        return 0.0
    column = _column_for(dist, n, k)
    return float(column.fa[k] / column.qn)


def exact_mean_Y(dist: OffspringDist, n: int, ell: int, m: int) -> float:
    """E Y_{l,m}(T_n)."""
    if ell < 0 or m < 0:
        raise ValidationException("l and m must be non-negative", details={"l": ell, "m": m})
    s = ell + m
    if s >= n:
        check_size(dist, n)
        return 0.0
    column = _column_for(dist, n, s)
    if ell and m:
        return float(column.dh[s - 2] / column.qn)
    return float(column.dfa[s] / column.qn)


def exact_mean_P(dist: OffspringDist, n: int, k: int) -> float:
    """E P_k(T_n) = (1/2) sum_{l+m=k} E Y_{l,m}(T_n)."""
    if k < 1:
        raise ValidationException("distance k must be at least 1", details={"k": k})
    if k >= n:
        check_size(dist, n)
        return 0.0
    column = _column_for(dist, n, k)
    value = 2.0 * column.dfa[k]
    if k >= 2:
        value += (k - 1) * column.dh[k - 2]
    return float(value / (2.0 * column.qn))


def exact_mean_Q(dist: OffspringDist, n: int, k: int) -> float:
    """E Q_k(T_n): pairs at distance k joined through the root."""
    if k < 1:
        raise ValidationException("distance k must be at least 1", details={"k": k})
    if k >= n:
        check_size(dist, n)
        return 0.0
    column = _column_for(dist, n, k)
    value = column.fa[k]
    if k >= 2:
        value += 0.5 * (k - 1) * column.hz[k - 2]
    return float(value / column.qn)


def level_means(dist: OffspringDist, n: int, kmax: int | None = None) -> np.ndarray:
    """E Z_k(T_n) for k = 0..kmax (default n - 1)."""
    kmax = n - 1 if kmax is None else min(kmax, n - 1)
    column = _column_for(dist, n, kmax)
    return column.fa[:kmax + 1] / column.qn


def pair_means(dist: OffspringDist, n: int) -> np.ndarray:
    """E P_k(T_n); entry k - 1 for k = 1..n-1."""
    if n == 1:
        check_size(dist, n)
        return np.zeros(0)
    column = _column_for(dist, n, n - 1)
    k = np.arange(1, n)
    values = 2.0 * column.dfa[k]
    values[1:] += (k[1:] - 1) * column.dh[k[1:] - 2]
    return values / (2.0 * column.qn)


def root_pair_means(dist: OffspringDist, n: int) -> np.ndarray:
    """E Q_k(T_n); entry k - 1 for k = 1..n-1."""
    if n == 1:
        check_size(dist, n)
        return np.zeros(0)
    column = _column_for(dist, n, n - 1)
    k = np.arange(1, n)
    values = column.fa[k].copy()
    values[1:] += 0.5 * (k[1:] - 1) * column.hz[k[1:] - 2]
    return values / column.qn


def y_means(dist: OffspringDist, n: int, lcap: int | None = None, mcap: int | None = None) -> np.ndarray:
    """Matrix E Y_{l,m}(T_n) for l <= lcap, m <= mcap (defaults n - 1)."""
    lcap = n - 1 if lcap is None else lcap
    mcap = n - 1 if mcap is None else mcap
    column = _column_for(dist, n, n - 1)
    ell = np.arange(lcap + 1)[:, None]
    m = np.arange(mcap + 1)[None, :]
    s = ell + m
    inside = s < n
    s_safe = np.where(inside, s, 0)
    edge = column.dfa[np.minimum(s_safe, column.kmax)]
    inner = column.dh[np.clip(s_safe - 2, 0, column.kmax)]
    out = np.where((ell > 0) & (m > 0), inner, edge)
    return np.where(inside, out, 0.0) / column.qn


def dwass_check(dist: OffspringDist, ell: int, n: int) -> tuple[float, float]:
    """
    P(W_l = n) two ways: [z^n] F^l from an independent Newton solve of
    F = z Phi(F), and (l/n) P(S_n = n - l) by convolution powers.
    """
    if ell < 1 or n < 1:
        raise ValidationException("l and n must be at least 1", details={"l": ell, "n": n})
    if ell > n:
        return 0.0, 0.0
    F = series_F(dist, n, method="newton")
    lhs = float((F ** ell)[n])
    rhs = progeny_probability(dist, ell, n)
    return lhs, rhs


def progeny_probability(dist: OffspringDist, ell: int, n: int) -> float:
    """(l/n) P(S_n = n - l)."""
    if ell > n:
        return 0.0
    degree = n - ell
    p = dist.probs(min(dist.support_cutoff(), degree))
    power = np.ones(1)
    for _ in range(n):
        power = np.convolve(power, p)[:degree + 1]
    return float(ell / n * power[degree]) if degree < len(power) else 0.0


def dwass_table(dist: OffspringDist, lmax: int, nmax: int) -> np.ndarray:
    """
    Rows (l, n, lhs, rhs) for 1 <= l <= lmax, 1 <= n <= nmax; the same two
    computations as dwass_check, sharing the powers of F and of Phi.
    """
    F = series_F(dist, nmax, method="newton")
    f_powers = np.zeros((lmax + 1, nmax + 1))
    current = TruncatedSeries.constant(1.0, nmax)
    for ell in range(1, lmax + 1):
        current = current * F
        f_powers[ell] = current.coeffs

    p = dist.probs(min(dist.support_cutoff(), nmax))
    power = np.ones(1)
    rows = []
    for n in range(1, nmax + 1):
        power = np.convolve(power, p)[:nmax + 1]
        for ell in range(1, lmax + 1):
            rhs = ell / n * power[n - ell] if 0 <= n - ell < len(power) else 0.0
            rows.append((ell, n, f_powers[ell, n], rhs))
    return np.asarray(rows)


def tail_ratio(dist: OffspringDist, n: int) -> float:
    """P(|T| = n) sigma sqrt(2 pi) n^(3/2) / span, which tends to 1."""
    check_size(dist, n)
    qn = series_F(dist, n)[n]
    return float(qn * dist.sigma * math.sqrt(2 * math.pi) * n ** 1.5 / dist.span)


def _F_fixed_point(dist: OffspringDist, z: float) -> float:
    """The root in (0, 1) of s = z Phi(s)."""
    if z == 0:
        return 0.0
    return brentq(lambda s: s - z * pgf(dist, s, 0), 0.0, 1.0, xtol=1e-15, rtol=4 * np.finfo(float).eps)


def singularity_ratio(
    dist: OffspringDist,
    z: float,
    method: Literal["fixed_point", "series"] = "fixed_point",
    N: int | None = None,
) -> float:
    """
    (1 - F(z)) sigma / (sqrt(2) sqrt(1 - z)), which tends to 1 as z -> 1-.

    ``series`` sums the Taylor series of F up to degree N (default: enough
    terms for z^N < 1e-13); ``fixed_point`` solves F = z Phi(F) directly.
    """
    if not 0 <= z < 1:
        raise OutOfDomainException(
            "singularity_ratio needs 0 <= z < 1 for a convergent series",
            details={"z": z},
        )
    if dist.span != 1:
        raise ValidationException("singularity_ratio is defined for span 1", details={"span": dist.span})
    if method == "series":
        if N is None:
            N = max(1, int(math.ceil(math.log(1e-13) / math.log(z)))) if z > 0 else 1
        value = series_F(dist, N).evaluate(z)
    else:
        value = _F_fixed_point(dist, z)
    return float((1.0 - value) * dist.sigma / (math.sqrt(2.0) * math.sqrt(1.0 - z)))


def meir_moon_limit(dist: OffspringDist, k: int) -> float:
    """lim_n E Z_k(T_n) = 1 + k sigma^2."""
    return 1.0 + k * dist.variance


def unconditioned_mean_Q(dist: OffspringDist, k: int) -> float:
    """E Q_k of the unconditioned tree, 1 + (k - 1) sigma^2 / 2."""
    return 1.0 + (k - 1) * dist.variance / 2.0


def fn_polynomial(dist: OffspringDist, n: int) -> FnPolynomial:
    coeffs = pair_means(dist, n)
    return FnPolynomial(n=n, offspring=dist.name, coeffs=[float(c) for c in coeffs])


def eval_fn(dist: OffspringDist, n: int, z: complex) -> complex:
    """f_n(z) by Horner's rule."""
    coeffs = np.concatenate([[0.0], pair_means(dist, n)])
    return complex(np.polynomial.polynomial.polyval(z, coeffs))


def eval_hn(dist: OffspringDist, n: int, x: complex, y: complex) -> complex:
    """h_n(x, y) = sum_{l,m} E Y_{l,m}(T_n) x^l y^m."""
    matrix = y_means(dist, n)
    powers = np.arange(n)
    xs = np.asarray(x, dtype=complex) ** powers
    ys = np.asarray(y, dtype=complex) ** powers
    return complex(xs @ matrix @ ys)


def in_domain(z: complex, beta: float, delta: float) -> bool:
    """z in {|z| < 1 + delta, z != 1, |arg(z - 1)| > pi/2 - beta}."""
    if z == 1 or abs(z) >= 1 + delta:
        return False
    return abs(cmath.phase(z - 1)) > math.pi / 2 - beta


def domain_grid(beta: float, delta: float, count: int) -> list[complex]:
    """
    Deterministic points of the domain: a polar lattice around 1 (radii
    geometric from 1e-3 to 2 + delta, angles uniform over the admissible
    arc) filtered by membership and thinned evenly to ``count`` points.
    """
    if not 0 < beta < math.pi / 2:
        raise ValidationException("beta must lie in (0, pi/2)", details={"beta": beta})
    if delta <= 0:
        raise ValidationException("delta must be positive", details={"delta": delta})
    if count < 1:
        raise ValidationException("count must be at least 1", details={"count": count})
    lowest = math.pi / 2 - beta
    resolution = max(4, int(math.ceil(math.sqrt(count))))
    while True:
        radii = np.geomspace(1e-3, 2 + delta, resolution)
        # open at the boundary angle, closed at pi
        upper = np.linspace(math.pi, lowest, resolution + 1)[:-1]
        angles = np.concatenate([upper, -upper[1:]])
        points = [1 + r * cmath.exp(1j * a) for r in radii for a in angles]
        inside = [p for p in points if in_domain(p, beta, delta)]
        if len(inside) >= count:
            picks = np.linspace(0, len(inside) - 1, count).round().astype(int)
            return [inside[i] for i in picks]
        resolution *= 2
