"""Simulation and empirical estimators of the diversification ratio.

Empirical quantiles follow the floor(p * m)-th order statistic exactly, with
no interpolation. The simulated estimator keeps the closed-form retained
ratio built from the exact Frechet quantile; the empirical estimator uses the
order statistic of the retained losses. Loss matrices are stored
column-major so per-participant sorts touch contiguous memory.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .distributions import FrechetParams, frechet_layer_expectation, frechet_quantile
from .errors import DegeneratePoolError
from .evt import evt_var
from .pool import LayerSpec, layer_loss

__all__ = [
    "PoolSample",
    "DrReport",
    "build_pool_sample",
    "dr_simulated",
    "dr_empirical",
    "empirical_order_statistic",
    "retained_ratio_closed_form",
]


@dataclass(frozen=True)
class PoolSample:
    """Loss observations with their ceded layers and pool aggregate.

    Attributes:
        losses: m x n ground-up losses, one column per participant.
        layers: m x n ceded layer losses.
        aggregate: Row sums of ``layers``.
        layer_specs: The coverage layers that produced ``layers``.
    """

    losses: np.ndarray
    layers: np.ndarray
    aggregate: np.ndarray
    layer_specs: tuple

    @property
    def m(self) -> int:
        return self.losses.shape[0]

    @property
    def n(self) -> int:
        return self.losses.shape[1]


@dataclass(frozen=True)
class DrReport:
    """Per-participant diversification ratios at one level p.

    ``dr = retained_ratio + share_ratio`` holds by construction.
    """

    retained_ratio: np.ndarray
    share_ratio: np.ndarray
    dr: np.ndarray
    p: float


def empirical_order_statistic(values, p: float) -> float:
    """The floor(p * m)-th order statistic (1-based), no interpolation."""
    values = np.asarray(values, dtype=float)
    rank = int(np.floor(p * values.size))
    if rank < 1:
        raise ValueError(
            f"floor(p * m) must be >= 1, got p={p}, m={values.size}")
    return float(np.partition(values, rank - 1)[rank - 1])


def retained_ratio_closed_form(quantile: float, layer: LayerSpec) -> float:
    """VaR of the retained loss over VaR of the ground-up loss.

    Three branches: full retention below the attachment, the attachment share
    in the covered band, and cap relief above the limit.
    """
    if quantile <= layer.attachment:
        return 1.0
    if quantile <= layer.limit:
        return layer.attachment / quantile
    return 1.0 - layer.width / quantile


def build_pool_sample(samples, layer_specs: Sequence[LayerSpec]) -> PoolSample:
    """Apply the coverage layers to a loss matrix and aggregate by row."""
    losses = np.asarray(samples, dtype=float)
    if losses.ndim != 2:
        raise ValueError(f"samples must be an m x n matrix, got shape "
                         f"{losses.shape}")
    if losses.shape[1] != len(layer_specs):
        raise ValueError(
            f"{losses.shape[1]} loss columns but {len(layer_specs)} layer specs")
    losses = np.asfortranarray(losses)
    layers = np.empty_like(losses)
    for i, spec in enumerate(layer_specs):
        layers[:, i] = layer_loss(losses[:, i], spec)
    return PoolSample(losses=losses, layers=layers,
                      aggregate=layers.sum(axis=1),
                      layer_specs=tuple(layer_specs))


def dr_simulated(pool: PoolSample, frechet: Sequence[FrechetParams],
                 p: float) -> DrReport:
    """Simulated diversification ratio over a frozen Frechet pool sample.

    The retained ratio uses the closed-form branches with the exact Frechet
    quantile; the premium share weighs the quadrature expected layer losses
    and the floor(p * m)-th order statistics of the aggregate and of each
    loss column.
    """
    if not 0 < p < 1:
        raise ValueError(f"p must lie in (0, 1), got {p}")
    if len(frechet) != pool.n:
        raise ValueError(
            f"{pool.n} pool columns but {len(frechet)} Frechet parameter sets")

    expected = np.array([
        frechet_layer_expectation(params, spec)
        for params, spec in zip(frechet, pool.layer_specs)])
    total_expected = expected.sum()
    if total_expected == 0.0:
        raise DegeneratePoolError(
            "no layer has positive expected loss; the pool provides no coverage")

    aggregate_stat = empirical_order_statistic(pool.aggregate, p)
    retained = np.empty(pool.n)
    share = np.empty(pool.n)
    for i in range(pool.n):
        quantile = frechet_quantile(frechet[i], p)
        retained[i] = retained_ratio_closed_form(quantile, pool.layer_specs[i])
        loss_stat = empirical_order_statistic(pool.losses[:, i], p)
        share[i] = expected[i] / total_expected * aggregate_stat / loss_stat
    return DrReport(retained_ratio=retained, share_ratio=share,
                    dr=retained + share, p=p)


def dr_empirical(data, alphas, xi: float, lambdas, p: float) -> DrReport:
    """Empirical diversification ratio over observed losses.

    Attachments extrapolate each participant's tail quantile
    (``xi**(a1/alpha_i)`` times the EVT VaR, with participant 0 the heaviest
    tail), limits scale them by lambda, and all quantities are estimated from
    the sample: retained VaR from the order statistic of the uncovered
    losses, expected layers from column means.
    """
    data = np.asfortranarray(np.asarray(data, dtype=float))
    if data.ndim != 2:
        raise ValueError(f"data must be an m x n matrix, got shape {data.shape}")
    m, n = data.shape
    if m < 5:
        raise ValueError(f"need at least 5 observations, got {m}")
    alphas = np.atleast_1d(np.asarray(alphas, dtype=float))
    lam = np.atleast_1d(np.asarray(lambdas, dtype=float))
    if alphas.size != n or lam.size != n:
        raise ValueError(
            f"alphas and lambdas must have length {n}, got {alphas.size} "
            f"and {lam.size}")
    if not 0.8 < p < 1:
        raise ValueError(
            f"p must lie in (0.8, 1) for the EVT extrapolation, got {p}")

    var_hat = np.array([evt_var(data[:, i], alphas[i], p) for i in range(n)])
    attach = xi ** (alphas[0] / alphas) * var_hat
    limits = lam * attach
    specs = [LayerSpec(attach[i], max(limits[i], attach[i])) for i in range(n)]

    layers = np.empty_like(data)
    for i in range(n):
        layers[:, i] = layer_loss(data[:, i], specs[i])
    expected = layers.mean(axis=0)
    total_expected = expected.sum()
    if total_expected == 0.0:
        raise DegeneratePoolError(
            "every observation falls outside its layer; the pool cedes nothing")

    aggregate_stat = empirical_order_statistic(layers.sum(axis=1), p)
    retained = np.empty(n)
    share = np.empty(n)
    for i in range(n):
        retained_var = empirical_order_statistic(data[:, i] - layers[:, i], p)
        retained[i] = retained_var / var_hat[i]
        loss_stat = empirical_order_statistic(data[:, i], p)
        share[i] = expected[i] / total_expected * aggregate_stat / loss_stat
    return DrReport(retained_ratio=retained, share_ratio=share,
                    dr=retained + share, p=p)
