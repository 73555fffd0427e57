"""Extreme-value estimators: Hill, pooled tail, empirical scale, VaR extrapolation.

Order statistics follow the 1-based convention X_(1) <= ... <= X_(m), mapped
internally to ``sorted[j - 1]``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from .errors import EstimationError


@dataclass(frozen=True)
class HillEstimate:
    """Hill estimate of the inverse tail index from the top k order statistics.

    Attributes:
        gamma: Inverse tail index estimate, > 0.
        alpha: Tail index estimate, 1/gamma.
        k: Number of top order statistics used, 1 <= k < m.
        m: Sample size.
    """

    gamma: float
    alpha: float
    k: int
    m: int


@dataclass(frozen=True)
class PooledTailEstimate:
    """Inverse-variance-weighted combination of Hill estimates.

    Attributes:
        gamma_pool: Weighted inverse tail index.
        alpha_pool: 1/gamma_pool.
        weights: Convex weights, proportional to k_i / gamma_i**2.
    """

    gamma_pool: float
    alpha_pool: float
    weights: np.ndarray


def order_statistics(sample) -> np.ndarray:
    """Nondecreasing copy of the sample (stable for ties)."""
    arr = np.asarray(sample, dtype=float)
    if arr.size == 0:
        raise ValueError("sample must be nonempty")
    return np.sort(arr, kind="stable")


def drop_nonpositive(sample) -> Tuple[np.ndarray, int]:
    """Remove observations <= 0 (their logs are undefined for Hill estimation).

    Returns the cleaned sample and the number of excluded observations.
    """
    arr = np.asarray(sample, dtype=float)
    keep = arr > 0
    return arr[keep], int(arr.size - keep.sum())


def hill_estimate(sample, k: int) -> HillEstimate:
    """Hill estimator from the k largest observations.

    gamma is the mean log-spacing of the top k order statistics over the
    threshold X_(m-k); alpha is its reciprocal.
    """
    sorted_sample = order_statistics(sample)
    m = sorted_sample.size
    if not 1 <= k < m:
        raise ValueError(f"k must satisfy 1 <= k < m = {m}, got {k}")
    threshold = sorted_sample[m - k - 1]
    if threshold <= 0:
        raise ValueError(
            f"threshold order statistic X_({m - k}) = {threshold} is not "
            "positive; drop nonpositive observations first")
    top = sorted_sample[m - k:]
    gamma = float(np.mean(np.log(top) - np.log(threshold)))
    if gamma == 0.0:
        raise EstimationError(
            "top order statistics are all equal; tail index is infinite")
    return HillEstimate(gamma=gamma, alpha=1.0 / gamma, k=k, m=m)


def hill_sweep(sample, ks: Sequence[int]) -> list:
    """Hill estimates over a range of k, for threshold-choice plots."""
    return [hill_estimate(sample, int(k)) for k in ks]


def pooled_tail_estimate(estimates: Sequence[HillEstimate]) -> PooledTailEstimate:
    """Combine Hill estimates with inverse-variance weights.

    The variance of each estimate is gamma_i**2 / k_i, so the minimum-variance
    convex weights are proportional to k_i / gamma_i**2.
    """
    if len(estimates) < 2:
        raise ValueError("need at least two Hill estimates to pool")
    gammas = np.array([e.gamma for e in estimates])
    ks = np.array([e.k for e in estimates], dtype=float)
    if np.any(gammas <= 0):
        raise ValueError(f"all gamma estimates must be positive, got {gammas}")
    raw = ks / gammas ** 2
    weights = raw / raw.sum()
    gamma_pool = float(weights @ gammas)
    return PooledTailEstimate(gamma_pool=gamma_pool, alpha_pool=1.0 / gamma_pool,
                              weights=weights)


def scale_estimate(sample_i, sample_ref, h: int) -> float:
    """Empirical relative tail scale of ``sample_i`` against ``sample_ref``.

    Counts exceedances of both samples over the reference sample's (m-h)-th
    order statistic; ties at the threshold count on both sides (>= in both
    indicators, no interpolation).
    """
    xi = np.asarray(sample_i, dtype=float)
    ref = np.asarray(sample_ref, dtype=float)
    if xi.size != ref.size:
        raise ValueError(
            f"samples must have equal length, got {xi.size} and {ref.size}")
    m = ref.size
    if not 1 <= h < m:
        raise ValueError(f"h must satisfy 1 <= h < m = {m}, got {h}")
    threshold = order_statistics(ref)[m - h - 1]
    denominator = int(np.count_nonzero(ref >= threshold))
    if denominator == 0:
        raise EstimationError("no reference exceedances at the threshold")
    numerator = int(np.count_nonzero(xi >= threshold))
    return numerator / denominator


def evt_var(sample, alpha_hat: float, p: float) -> float:
    """Tail quantile extrapolated from the empirical 0.8 quantile.

    Anchors at the order statistic of rank floor(0.8 m) and scales it by
    (0.2 / (1 - p))**(1/alpha_hat). Only valid for p > 0.8; below that, use
    the empirical quantile directly.
    """
    if not 0.8 < p < 1:
        raise ValueError(f"p must lie in (0.8, 1), got {p}")
    if not alpha_hat > 0:
        raise ValueError(f"alpha_hat must be positive, got {alpha_hat}")
    sorted_sample = order_statistics(sample)
    m = sorted_sample.size
    anchor = sorted_sample[int(np.floor(0.8 * m)) - 1]
    return float(anchor * (0.2 / (1.0 - p)) ** (1.0 / alpha_hat))
