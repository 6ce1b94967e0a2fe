"""
Named verification suites. Each suite runs one family of checks with the
tolerances of the acceptance sweeps and returns a SuiteResult; the command
layer turns a failed result into a VerificationFailedException.
"""
import logging
import math
from typing import Any, Callable

import numpy as np
from scipy.stats import ks_2samp

from gwtrees.exceptions import ValidationException
from gwtrees.operations.labels import gamma, make_displacement, profile_at, psi_sweep, vertical_profile
from gwtrees.operations.models import RunConfig, SuiteResult
from gwtrees.operations.offspring import OffspringDist, make_offspring
from gwtrees.operations.oracle import exact_conditioned_expectation, weighted_trees
from gwtrees.operations.series import (
    coefficient_tables,
    domain_grid,
    dwass_table,
    exact_mean_Z,
    level_means,
    pair_means,
    root_pair_means,
    series_F,
    singularity_ratio,
    tail_ratio,
    unconditioned_mean_Q,
    y_means,
)
from gwtrees.operations.stats import (
    estimate_mean,
    estimate_root_pairs_unconditioned,
    level_profile,
    pair_profile,
    pair_profile_bruteforce,
    root_pair_counts,
)
from gwtrees.operations.streams import replicate_rng
from gwtrees.operations.trees import ConditionedSource, fringe_subtree, sample_conditioned

logger = logging.getLogger(__name__)

SuiteFunction = Callable[[RunConfig], SuiteResult]

BUILT_IN_LAWS = ["geometric", "poisson", "binary", "custom:0.25,0.5,0.25"]


def _given(config: RunConfig, field: str, default: Any) -> Any:
    """The flag value if it was passed explicitly, else the suite default."""
    if field in config.model_fields_set and getattr(config, field) is not None:
        return getattr(config, field)
    return default


def _laws(config: RunConfig, default: list[str]) -> list[OffspringDist]:
    return [make_offspring(spec) for spec in _given(config, "offspring", default)]


def _compatible(dist: OffspringDist, sizes) -> list[int]:
    return [n for n in sizes if (n - 1) % dist.span == 0]


def _result(
    name: str,
    anchor: str,
    observed: float,
    tolerance: float,
    passed: bool,
    header: list[str],
    rows: list[list[Any]],
    **metrics: Any,
) -> SuiteResult:
    return SuiteResult(
        name=name,
        anchor=anchor,
        passed=bool(passed),
        metrics={"observed": float(observed), "tolerance": float(tolerance), **metrics},
        header=header,
        rows=rows,
    )


def halves_growth(ns: list[int], maxima: list[float], split: int) -> float:
    """Relative increase of the maximum over n > split against n <= split; zero if it falls."""
    first = max((m for n, m in zip(ns, maxima) if n <= split), default=None)
    second = max((m for n, m in zip(ns, maxima) if n > split), default=None)
    if first is None or second is None:
        return 0.0
    return max(second / first - 1.0, 0.0)


def successive_growth(maxima: list[float]) -> float:
    """Largest relative increase between successive entries."""
    steps = [b / a - 1.0 if a > 0 else (math.inf if b > 0 else 0.0) for a, b in zip(maxima, maxima[1:])]
    return max(steps, default=0.0)


def suite_dwass(config: RunConfig) -> SuiteResult:
    lmax = _given(config, "lmax", 20)
    nmax = max(_given(config, "n", [200]))
    tolerance = 1e-12
    rows = []
    worst = 0.0
    for dist in _laws(config, BUILT_IN_LAWS):
        table = dwass_table(dist, lmax, nmax)
        lhs, rhs = table[:, 2], table[:, 3]
        scale = np.maximum(np.abs(lhs), np.abs(rhs))
        rel = np.where(scale > 0, np.abs(lhs - rhs) / np.where(scale > 0, scale, 1.0), 0.0)
        worst = max(worst, float(rel.max()))
        rows.extend([dist.name, int(ell), int(n), a, b, r] for (ell, n, a, b), r in zip(table.tolist(), rel.tolist()))
    return _result(
        "dwass", "P(W_l = n) = (l/n) P(S_n = n - l)", worst, tolerance, worst <= tolerance,
        ["offspring", "l", "n", "lhs", "rhs", "rel_diff"], rows,
        max_rel_diff=worst,
    )


def suite_tail(config: RunConfig) -> SuiteResult:
    rows = []
    worst_excess = 0.0
    observed, tolerance = 0.0, 0.01
    for dist in _laws(config, ["geometric", "poisson", "binary"]):
        cap = max(_given(config, "n", [2000]))
        n = 1 + dist.span * ((cap - 1) // dist.span)
        tol = 0.01 if dist.span == 1 else 0.05
        ratio = tail_ratio(dist, n)
        deviation = abs(ratio - 1.0)
        rows.append([dist.name, n, ratio, tol])
        if deviation / tol > worst_excess:
            worst_excess = deviation / tol
            observed, tolerance = deviation, tol
    return _result(
        "tail", "P(|T| = n) ~ d / (sigma sqrt(2 pi) n^(3/2))", observed, tolerance, worst_excess <= 1.0,
        ["offspring", "n", "ratio", "tolerance"], rows,
    )


def suite_meirmoon(config: RunConfig) -> SuiteResult:
    n = max(_given(config, "n", [5000]))
    ks = [config.k] if config.k is not None else [1, 2, 5]
    tolerance = 0.02
    rows = []
    worst = 0.0
    for dist in _laws(config, ["geometric", "poisson"]):
        for k in ks:
            value = exact_mean_Z(dist, n, k)
            limit = 1.0 + k * dist.variance
            rel = abs(value / limit - 1.0)
            worst = max(worst, rel)
            rows.append([dist.name, n, k, value, limit, rel])
    return _result(
        "meirmoon", "E Z_k(T_n) -> 1 + k sigma^2", worst, tolerance, worst < tolerance,
        ["offspring", "n", "k", "exact", "limit", "rel_diff"], rows,
    )


def suite_singularity(config: RunConfig) -> SuiteResult:
    tolerance = 0.02
    rows = []
    worst = 0.0
    agreement = 0.0
    for dist in _laws(config, ["geometric", "poisson"]):
        for z in (0.9, 0.99, 0.999):
            ratio = singularity_ratio(dist, z)
            rows.append([dist.name, z, "fixed_point", ratio])
        worst = max(worst, abs(ratio - 1.0))
        summed = singularity_ratio(dist, 0.9, method="series")
        agreement = max(agreement, abs(summed - rows[-3][3]))
        rows.append([dist.name, 0.9, "series", summed])
    return _result(
        "singularity", "1 - F(z) ~ sqrt(2) sigma^-1 sqrt(1 - z)", worst, tolerance,
        worst <= tolerance and agreement < 1e-8,
        ["offspring", "z", "method", "ratio"], rows,
        series_agreement=agreement,
    )


def _sweep_sizes(config: RunConfig, dist: OffspringDist) -> list[int]:
    nmax = max(_given(config, "n", [500]))
    return _compatible(dist, range(25, nmax + 1))


def _exact_sweep(
    config: RunConfig,
    name: str,
    anchor: str,
    tolerance: float,
    per_n: Callable[[OffspringDist, int], tuple[float, Any]],
    index_label: str,
) -> SuiteResult:
    rows = []
    worst = 0.0
    maxima_by_law: dict[str, float] = {}
    for dist in _laws(config, ["geometric", "poisson"]):
        ns = _sweep_sizes(config, dist)
        coefficient_tables(dist, ns[-1], ns[-1] - 1)
        maxima = []
        for n in ns:
            value, where = per_n(dist, n)
            maxima.append(value)
            rows.append([dist.name, n, value, where])
        growth = halves_growth(ns, maxima, ns[-1] // 2)
        worst = max(worst, growth)
        maxima_by_law[dist.name] = max(maxima)
        logger.info("sweep finished", extra={"suite": name, "offspring": dist.name, "growth": growth})
    return _result(
        name, anchor, worst, tolerance, worst < tolerance,
        ["offspring", "n", "max_ratio", index_label], rows,
        maxima=maxima_by_law,
    )


def suite_theorem1(config: RunConfig) -> SuiteResult:
    def per_n(dist: OffspringDist, n: int) -> tuple[float, int]:
        ratios = pair_means(dist, n) / (n * np.arange(1, n))
        return float(ratios.max()), int(ratios.argmax()) + 1

    return _exact_sweep(config, "theorem1", "E P_k(T_n) <= C n k", 0.05, per_n, "argmax_k")


def suite_t11(config: RunConfig) -> SuiteResult:
    cap = _given(config, "lmax", 40)

    def per_n(dist: OffspringDist, n: int) -> tuple[float, str]:
        ratios = y_means(dist, n, cap, _given(config, "mmax", cap)) / n
        ell, m = np.unravel_index(int(ratios.argmax()), ratios.shape)
        return float(ratios.max()), f"{ell}:{m}"

    return _exact_sweep(config, "t11", "E Y_{l,m}(T_n) <= C n", 0.05, per_n, "argmax_lm")


def suite_tq(config: RunConfig) -> SuiteResult:
    def per_n(dist: OffspringDist, n: int) -> tuple[float, int]:
        ratios = root_pair_means(dist, n) / (np.arange(1, n) * math.sqrt(n))
        return float(ratios.max()), int(ratios.argmax()) + 1

    return _exact_sweep(config, "tq", "E Q_k(T_n) <= C k sqrt(n)", 0.10, per_n, "argmax_k")


def suite_l1b(config: RunConfig) -> SuiteResult:
    def per_n(dist: OffspringDist, n: int) -> tuple[float, int]:
        k = np.arange(n)
        ratios = level_means(dist, n) / np.minimum(k + 1, math.sqrt(n))
        return float(ratios.max()), int(ratios.argmax())

    return _exact_sweep(config, "l1b", "E Z_k(T_n) <= C min(k + 1, sqrt(n))", 0.10, per_n, "argmax_k")


def _drift(maxima: list[float]) -> float:
    return max(maxima) / min(maxima) - 1.0 if maxima else 0.0


def suite_tgen1(config: RunConfig) -> SuiteResult:
    """
    Drift of max |f_n(z)| |1 - z|^2 / n over the domain grid across n. The
    drift restricted to grid points with |z| <= 1 is reported alongside.
    """
    ns = _given(config, "n", [51, 101, 201])
    points = np.asarray(domain_grid(config.beta, config.delta, config.grid))
    distance = np.abs(1.0 - points)
    in_disc = np.abs(points) <= 1.0
    tolerance = 0.10
    rows = []
    worst = 0.0
    maxima_by_law: dict[str, list[float]] = {}
    disc_drift: dict[str, float] = {}
    for dist in _laws(config, ["geometric"]):
        maxima, disc_maxima = [], []
        for n in _compatible(dist, ns):
            coeffs = np.concatenate([[0.0], pair_means(dist, n)])
            ratios = np.abs(np.polynomial.polynomial.polyval(points, coeffs)) * distance ** 2 / n
            i = int(ratios.argmax())
            maxima.append(float(ratios[i]))
            if in_disc.any():
                disc_maxima.append(float(ratios[in_disc].max()))
            rows.append([dist.name, n, points[i].real, points[i].imag, float(ratios[i])])
        worst = max(worst, _drift(maxima))
        maxima_by_law[dist.name] = maxima
        disc_drift[dist.name] = _drift(disc_maxima)
    return _result(
        "tgen1", "|f_n(z)| <= C n |1 - z|^-2", worst, tolerance, worst < tolerance,
        ["offspring", "n", "z_re", "z_im", "ratio"], rows,
        maxima=maxima_by_law, disc_drift=disc_drift,
    )


def suite_tgen2(config: RunConfig) -> SuiteResult:
    """The bivariate analogue of tgen1 for h_n on pairs of grid points."""
    ns = _given(config, "n", [51, 101, 201])
    side = _given(config, "grid", 30)
    points = np.asarray(domain_grid(config.beta, config.delta, side))
    distance = np.abs(1.0 - points)
    in_disc = np.abs(points) <= 1.0
    both_in_disc = np.outer(in_disc, in_disc)
    tolerance = 0.10
    rows = []
    worst = 0.0
    maxima_by_law: dict[str, list[float]] = {}
    disc_drift: dict[str, float] = {}
    for dist in _laws(config, ["geometric"]):
        maxima, disc_maxima = [], []
        for n in _compatible(dist, ns):
            powers = points[:, None] ** np.arange(n)[None, :]
            h = powers @ y_means(dist, n) @ powers.T
            ratios = np.abs(h) * np.outer(distance, distance) / n
            i, j = np.unravel_index(int(ratios.argmax()), ratios.shape)
            maxima.append(float(ratios[i, j]))
            if both_in_disc.any():
                disc_maxima.append(float(ratios[both_in_disc].max()))
            rows.append([dist.name, n, points[i].real, points[i].imag, points[j].real, points[j].imag, float(ratios[i, j])])
        worst = max(worst, _drift(maxima))
        maxima_by_law[dist.name] = maxima
        disc_drift[dist.name] = _drift(disc_maxima)
    return _result(
        "tgen2", "|h_n(x, y)| <= C n |1 - x|^-1 |1 - y|^-1", worst, tolerance, worst < tolerance,
        ["offspring", "n", "x_re", "x_im", "y_re", "y_im", "ratio"], rows,
        maxima=maxima_by_law, disc_drift=disc_drift,
    )


def suite_qk(config: RunConfig) -> SuiteResult:
    reps = _given(config, "reps", 1_000_000)
    ks = [config.k] if config.k is not None else list(range(1, 11))
    tolerance = 3.0
    rows = []
    worst = 0.0
    rng = np.random.default_rng(config.seed)
    for dist in _laws(config, ["geometric", "poisson"]):
        table = estimate_root_pairs_unconditioned(dist, max(ks), reps, rng)
        for k in ks:
            target = unconditioned_mean_Q(dist, k)
            z = abs(table.mean(k) - target) / table.stderr(k)
            worst = max(worst, z)
            rows.append([dist.name, k, table.mean(k), table.stderr(k), target, z])
    return _result(
        "qk", "E Q_k = 1 + (k - 1) sigma^2 / 2", worst, tolerance, worst <= tolerance,
        ["offspring", "k", "estimate", "stderr", "target", "z_score"], rows,
        reps=reps,
    )


def suite_l0(config: RunConfig) -> SuiteResult:
    dist = _laws(config, ["geometric"])[0]
    eta = make_displacement(_given(config, "eta", ["uniform3"])[0])
    ns = _compatible(dist, _given(config, "n", [100, 400, 1600]))
    ts = _given(config, "t", list(np.linspace(-math.pi, math.pi, 41)))
    reps = _given(config, "reps", 10_000)
    tolerance = 0.25
    rows = []
    maxima = []
    for n in ns:
        estimates = psi_sweep(dist, eta, n, ts, reps, config.seed + n)
        scaled = [(1 + n * e.t ** 4) * e.psi for e in estimates]
        maxima.append(max(scaled))
        rows.extend([n, e.t, e.psi, e.stderr, s] for e, s in zip(estimates, scaled))
    growth = successive_growth(maxima)
    return _result(
        "l0", "Psi(n, t) <= C / (1 + n t^4)", growth, tolerance, growth < tolerance,
        ["n", "t", "psi", "stderr", "scaled"], rows,
        maxima=maxima,
    )


def suite_l1a(config: RunConfig) -> SuiteResult:
    dist = _laws(config, ["geometric"])[0]
    ns = _compatible(dist, _given(config, "n", [100, 400, 1600]))
    reps = _given(config, "reps", 10_000)
    tolerance = 0.25
    rows = []
    ratios = []
    for n in ns:
        k = math.isqrt(n)
        table = estimate_mean("Z2", ConditionedSource(dist, n), reps, config.seed + n)
        ratio = table.mean(k) / n
        ratios.append(ratio)
        rows.append([dist.name, n, k, table.mean(k), table.stderr(k), ratio])
    growth = successive_growth(ratios)
    return _result(
        "l1a", "E Z_k(T_n)^2 <= C n", growth, tolerance, growth < tolerance,
        ["offspring", "n", "k", "mean_z2", "stderr", "ratio"], rows,
    )


def suite_universality(config: RunConfig) -> SuiteResult:
    n = max(_given(config, "n", [5000]))
    reps = _given(config, "reps", 2000)
    pairs = [("geometric", "uniform3"), ("poisson", "pm1")]
    tolerance = 0.1
    samples = []
    for offset, (law, label_law) in enumerate(pairs):
        dist, eta = make_offspring(law), make_displacement(label_law)
        g = gamma(dist, eta)
        values = np.empty(reps)
        for r in range(reps):
            rng = replicate_rng(config.seed + offset, r)
            profile = vertical_profile(sample_conditioned(dist, n, rng), eta, rng)
            values[r] = profile_at(profile, g, 0.0)
        samples.append(values)
    statistic = float(ks_2samp(samples[0], samples[1]).statistic)
    rows = [[law, eta, float(v.mean()), float(v.std(ddof=1))] for (law, eta), v in zip(pairs, samples)]
    return _result(
        "universality", "normalised profile at 0 has a law-free limit", statistic, tolerance, statistic < tolerance,
        ["offspring", "eta", "mean", "std"], rows,
        ks_statistic=statistic, n=n, reps=reps,
    )


def tree_identity_violations(tree) -> dict[str, int]:
    """Counts of failed per-tree identities (zero for a correct implementation)."""
    n = tree.n
    pp = pair_profile(tree, n - 1, n - 1)
    brute = pair_profile_bruteforce(tree, n - 1, n - 1)
    z = level_profile(tree).z
    rp = root_pair_counts(tree)

    width = len(rp.q)
    q_sum = np.zeros(max(n, width), dtype=np.int64)
    for v in range(n):
        q = root_pair_counts(fringe_subtree(tree, v)).q
        q_sum[:len(q)] += q
    zq = np.zeros(width, dtype=np.int64)
    zq[:min(len(z), width)] = z[:width]
    zq[0] = 0

    ell, m = np.indices(pp.y.shape)
    antidiagonal = np.bincount((ell + m).ravel(), weights=pp.y.ravel(), minlength=2 * n)[:n]
    return {
        "bruteforce": int(not (np.array_equal(pp.p, brute.p) and np.array_equal(pp.y, brute.y))),
        "q_split": int(not np.array_equal(rp.q[1:], rp.qp[1:] + zq[1:])),
        "fringe_sum": int(not np.array_equal(q_sum[1:n], pp.p[1:n])),
        "pair_split": int(not np.array_equal(2 * pp.p[1:], antidiagonal[1:].astype(np.int64))),
    }


def suite_identities(config: RunConfig) -> SuiteResult:
    ns = _given(config, "n", [10, 50, 200])
    reps = _given(config, "reps", 1000)
    rows = []
    total = 0
    for dist in _laws(config, ["geometric", "poisson", "binary"]):
        for n in _compatible(dist, ns):
            failures = {"bruteforce": 0, "q_split": 0, "fringe_sum": 0, "pair_split": 0}
            for r in range(reps):
                tree = sample_conditioned(dist, n, replicate_rng(config.seed + n, r))
                for key, bad in tree_identity_violations(tree).items():
                    failures[key] += bad
            total += sum(failures.values())
            rows.append([dist.name, n, reps, *failures.values()])
    return _result(
        "identities", "per-tree pair decompositions", total, 0, total == 0,
        ["offspring", "n", "trees", "bruteforce", "q_split", "fringe_sum", "pair_split"], rows,
    )


def suite_oracle(config: RunConfig) -> SuiteResult:
    nmax = max(_given(config, "n", [9]))
    cap = _given(config, "lmax", 8)
    tolerance = 1e-9
    rows = []
    worst = 0.0
    weight_worst = 0.0
    for dist in _laws(config, BUILT_IN_LAWS):
        F = series_F(dist, nmax)
        for n in _compatible(dist, range(1, nmax + 1)):
            weight_diff = abs(weighted_trees(dist, n).total_weight - F[n])
            z_diff = np.abs(exact_conditioned_expectation(dist, n, "Z") - level_means(dist, n)).max()
            oracle_p = exact_conditioned_expectation(dist, n, "P")[1:]
            p_diff = np.abs(oracle_p - pair_means(dist, n)).max() if n > 1 else 0.0
            oracle_y = exact_conditioned_expectation(dist, n, lambda t: pair_profile(t, cap, cap).y)
            exact_y = y_means(dist, n, cap, cap)[:oracle_y.shape[0], :oracle_y.shape[1]]
            y_diff = np.abs(oracle_y - exact_y).max()
            diff = max(z_diff, p_diff, y_diff)
            worst = max(worst, diff)
            weight_worst = max(weight_worst, weight_diff)
            rows.append([dist.name, n, weight_diff, z_diff, p_diff, y_diff])
    return _result(
        "oracle", "series expectations equal enumeration", worst, tolerance,
        worst <= tolerance and weight_worst <= 1e-12,
        ["offspring", "n", "weight_diff", "z_diff", "p_diff", "y_diff"], rows,
        max_weight_diff=weight_worst,
    )


SUITES: dict[str, SuiteFunction] = {
    "dwass": suite_dwass,
    "tail": suite_tail,
    "theorem1": suite_theorem1,
    "t11": suite_t11,
    "tgen1": suite_tgen1,
    "tgen2": suite_tgen2,
    "qk": suite_qk,
    "tq": suite_tq,
    "l0": suite_l0,
    "meirmoon": suite_meirmoon,
    "singularity": suite_singularity,
    "identities": suite_identities,
    "l1a": suite_l1a,
    "l1b": suite_l1b,
    "universality": suite_universality,
    "oracle": suite_oracle,
}


def run_suite(name: str, config: RunConfig) -> SuiteResult:
    try:
        suite = SUITES[name]
    except KeyError:
        raise ValidationException(f"Unknown suite '{name}'", details={"known": sorted(SUITES)})
    logger.info("suite started", extra={"suite": name, "seed": config.seed})
    result = suite(config)
    level = logging.INFO if result.passed else logging.WARNING
    logger.log(level, "suite finished", extra={"suite": name, "passed": result.passed, "metrics": result.metrics})
    return result
