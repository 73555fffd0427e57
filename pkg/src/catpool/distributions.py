"""Frechet distribution primitives.

The Frechet family is the concrete regularly-varying loss law used for
simulation and for closed-form cross-checks: ``F(x) = exp(-(x/scale)**-alpha)``
for ``x > 0``. Smaller ``alpha`` means a heavier tail; ``alpha <= 1`` has an
infinite mean.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np
from scipy.integrate import quad

if TYPE_CHECKING:
    from .pool import LayerSpec


@dataclass(frozen=True)
class FrechetParams:
    """Shape/scale pair of a Frechet loss law.

    Attributes:
        alpha: Tail index, dimensionless, > 0.
        scale: Scale in the same monetary units as losses, > 0.
    """

    alpha: float
    scale: float

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if not self.scale > 0:
            raise ValueError(f"scale must be positive, got {self.scale}")


def frechet_cdf(params: FrechetParams, x):
    """Distribution function; 0 for ``x <= 0`` so zero-loss data passes through.

    Accepts scalars or arrays and preserves the input shape.
    """
    x = np.asarray(x, dtype=float)
    z = np.where(x > 0, x / params.scale, 1.0)
    out = np.where(x > 0, np.exp(-(z ** -params.alpha)), 0.0)
    return out if out.ndim else float(out)


def frechet_quantile(params: FrechetParams, p):
    """Quantile function ``scale * (-ln p)**(-1/alpha)`` for ``p`` in (0, 1)."""
    p_arr = np.asarray(p, dtype=float)
    if np.any(p_arr <= 0) or np.any(p_arr >= 1):
        raise ValueError(f"p must lie strictly inside (0, 1), got {p}")
    out = params.scale * (-np.log(p_arr)) ** (-1.0 / params.alpha)
    return out if out.ndim else float(out)


def frechet_sample(params: FrechetParams, count: int, seed: int) -> np.ndarray:
    """Draw ``count`` i.i.d. losses by inverse transform on seeded uniforms.

    Each call builds its own generator from ``seed``, so repeated calls with
    the same arguments return identical vectors and concurrent callers never
    share state.
    """
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    rng = np.random.default_rng(seed)
    u = rng.random(count)
    with np.errstate(divide="ignore"):
        return params.scale * (-np.log(u)) ** (-1.0 / params.alpha)


def frechet_layer_expectation(params: FrechetParams, layer: "LayerSpec") -> float:
    """Expected layer loss ``int_d^l (1 - F(x)) dx`` by adaptive quadrature.

    Absolute tolerance is ``1e-10 * (limit - attachment)``; the result lies in
    ``[0, limit - attachment]``.
    """
    d, l = layer.attachment, layer.limit
    if d > l:
        raise ValueError(f"attachment {d} exceeds limit {l}")
    if d == l:
        return 0.0

    def survival(x):
        return 1.0 - frechet_cdf(params, x)

    width = l - d
    value, _ = quad(survival, d, l, epsabs=1e-10 * width, epsrel=1e-10,
                    limit=200)
    return min(max(value, 0.0), width)
