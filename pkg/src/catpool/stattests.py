"""Hypothesis tests for the empirical screening.

Covers the regular-variation test (statistic against simulated
Brownian-bridge critical values), the two-sample tail-equivalence chi-square
test, and Pearson/Spearman correlation tests with t-approximation p-values.
"""

from __future__ import annotations

import importlib.resources
from dataclasses import dataclass
from typing import Dict, Sequence, Tuple

import numpy as np
from scipy.integrate import quad
from scipy.stats import chi2, rankdata
from scipy.stats import t as t_dist

from .errors import EstimationError
from .evt import (PooledTailEstimate, hill_estimate, order_statistics,
                  pooled_tail_estimate)

_GOLDEN_RESOURCE = "rv_critical_values.txt"


@dataclass(frozen=True)
class RvTestResult:
    """Outcome of the regular-variation test at one (k, significance).

    ``reject`` holds exactly when the statistic exceeds the critical value;
    rejection is evidence against a regularly varying tail.
    """

    statistic: float
    critical_value: float
    significance: float
    k: int
    reject: bool


@dataclass(frozen=True)
class TailEquivalenceResult:
    """Outcome of the two-sample tail-equivalence test.

    The statistic follows a chi-square law with one degree of freedom under
    the null of a common tail index.
    """

    statistic: float
    p_value: float
    pooled: PooledTailEstimate


def rv_test_statistic(sample, k: int) -> float:
    """Integral statistic comparing top-k log-spacings to the fitted tail.

    The integrand is piecewise smooth: floor(k t) is constant between
    consecutive multiples of 1/k, so the integral is evaluated segment by
    segment with adaptive quadrature (absolute tolerance 1e-12 each). Near
    t = 0 the convention X_(m - 0) = X_(m), the sample maximum, applies.
    """
    sorted_sample = order_statistics(sample)
    m = sorted_sample.size
    if not 1 <= k < m:
        raise ValueError(f"k must satisfy 1 <= k < m = {m}, got {k}")
    top = sorted_sample[m - k - 1:]
    if top[0] <= 0:
        raise ValueError(
            "order statistics entering the test must be positive")
    gamma = hill_estimate(sample, k).gamma
    log_threshold = np.log(sorted_sample[m - k - 1])

    total = 0.0
    for j in range(k):
        c = (np.log(sorted_sample[m - j - 1]) - log_threshold) / gamma

        def integrand(t, c=c):
            return (c + np.log(t)) ** 2 * t ** 2

        piece, _ = quad(integrand, j / k, (j + 1) / k, epsabs=1e-12,
                        epsrel=1e-10, limit=200)
        total += piece
    return k * total


def simulate_limit_statistic(grid: int, replications: int, seed: int,
                             _batch: int = 400) -> np.ndarray:
    """Monte Carlo draws of the limiting Brownian-bridge functional.

    Each replication builds a Brownian bridge on a uniform grid, evaluates the
    inner integral of B(s)/s by trapezoid truncated at the first grid point
    (the s -> 0 contribution is absorbed by the quantile's Monte Carlo
    tolerance), and the outer square integral by trapezoid. Deterministic for
    a given seed, independent of batching.
    """
    if grid < 1000:
        raise ValueError(f"grid must be >= 1000, got {grid}")
    if replications < 10_000:
        raise ValueError(
            f"replications must be >= 10000, got {replications}")

    rng = np.random.default_rng(seed)
    dt = 1.0 / grid
    s = np.arange(1, grid + 1) * dt
    t_log_t = np.concatenate([[0.0], s * np.log(s)])  # t ln t -> 0 at t = 0

    values = np.empty(replications)
    done = 0
    while done < replications:
        b = min(_batch, replications - done)
        steps = rng.standard_normal((b, grid)) * np.sqrt(dt)
        motion = np.cumsum(steps, axis=1)
        bridge = motion - np.outer(motion[:, -1], s)
        inner = np.trapezoid(bridge / s, dx=dt, axis=1)
        path = np.concatenate([np.zeros((b, 1)), bridge], axis=1)
        path += t_log_t * inner[:, None]
        values[done:done + b] = np.trapezoid(path * path, dx=dt, axis=1)
        done += b
    return values


def rv_critical_value(significance: float, grid: int, replications: int,
                      seed: int) -> float:
    """Upper quantile of the limiting functional of the regular-variation test."""
    if not 0 < significance <= 1:
        raise ValueError(f"significance must lie in (0, 1], got {significance}")
    values = simulate_limit_statistic(grid, replications, seed)
    return float(np.quantile(values, 1.0 - significance))


def tabulate_critical_values(significances: Sequence[float], grid: int,
                             replications: int, seed: int) -> list:
    """One simulation pass, quantiled at each significance level."""
    values = simulate_limit_statistic(grid, replications, seed)
    return [
        {"significance": float(s),
         "critical_value": float(np.quantile(values, 1.0 - s)),
         "grid": grid, "replications": replications, "seed": seed}
        for s in significances
    ]


def load_critical_values() -> Dict[float, dict]:
    """Parse the packaged critical-value table into {significance: entry}."""
    text = (importlib.resources.files("catpool") / "data"
            / _GOLDEN_RESOURCE).read_text(encoding="utf-8")
    return parse_critical_values(text)


def parse_critical_values(text: str) -> Dict[float, dict]:
    table: Dict[float, dict] = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        entry = {}
        for token in line.split():
            key, _, value = token.partition("=")
            entry[key] = value
        significance = float(entry["significance"])
        table[significance] = {
            "significance": significance,
            "critical_value": float(entry["critical_value"]),
            "grid": int(entry["grid"]),
            "replications": int(entry["replications"]),
            "seed": int(entry["seed"]),
        }
    return table


def format_critical_values(entries: Sequence[dict]) -> str:
    lines = [
        "# Upper-tail critical values of the limiting Brownian-bridge",
        "# functional for the regular-variation test, by Monte Carlo.",
        "# Regenerate with: catpool rv-critical",
    ]
    for e in entries:
        lines.append(
            "significance={significance:g} critical_value={critical_value:.6f} "
            "grid={grid} replications={replications} seed={seed}".format(**e))
    return "\n".join(lines) + "\n"


def rv_test(sample, k: int, significance: float = 0.01,
            critical_value: float | None = None) -> RvTestResult:
    """Run the regular-variation test against a tabulated critical value."""
    if critical_value is None:
        table = load_critical_values()
        if significance not in table:
            raise ValueError(
                f"no tabulated critical value at significance {significance}; "
                f"available: {sorted(table)}")
        critical_value = table[significance]["critical_value"]
    statistic = rv_test_statistic(sample, k)
    return RvTestResult(statistic=statistic, critical_value=critical_value,
                        significance=significance, k=k,
                        reject=statistic > critical_value)


def tail_equivalence_test(samples: Tuple, ks) -> TailEquivalenceResult:
    """Two-sample test of a common tail index via the pooled Hill estimate."""
    if len(samples) != 2:
        raise ValueError("tail equivalence test takes exactly two samples")
    if np.isscalar(ks):
        ks = (int(ks), int(ks))
    estimates = [hill_estimate(s, int(k)) for s, k in zip(samples, ks)]
    pooled = pooled_tail_estimate(estimates)
    statistic = float(sum(
        e.k * (e.gamma - pooled.gamma_pool) ** 2 / e.gamma ** 2
        for e in estimates))
    p_value = float(chi2.sf(statistic, df=1))
    return TailEquivalenceResult(statistic=statistic, p_value=p_value,
                                 pooled=pooled)


def _t_approx_p_value(r: float, m: int) -> float:
    if abs(r) >= 1.0:
        return 0.0
    t_stat = r * np.sqrt((m - 2) / (1.0 - r * r))
    return float(2.0 * t_dist.sf(abs(t_stat), df=m - 2))


def correlation_tests(x, y) -> Tuple[Tuple[float, float], Tuple[float, float]]:
    """Pearson and Spearman coefficients with two-sided t-approximation p-values.

    Returns ((pearson_r, p), (spearman_rho, p)); Spearman uses average ranks
    for ties. Zero variance in either input leaves the coefficients undefined.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size != y.size:
        raise ValueError(f"length mismatch: {x.size} vs {y.size}")
    m = x.size
    if m < 3:
        raise ValueError(f"need at least 3 observations, got {m}")
    if np.std(x) == 0 or np.std(y) == 0:
        raise EstimationError("correlation undefined for constant input")

    def pearson(a, b):
        a = a - a.mean()
        b = b - b.mean()
        return float(a @ b / np.sqrt((a @ a) * (b @ b)))

    r_pearson = pearson(x, y)
    r_spearman = pearson(rankdata(x), rankdata(y))
    return ((r_pearson, _t_approx_p_value(r_pearson, m)),
            (r_spearman, _t_approx_p_value(r_spearman, m)))
