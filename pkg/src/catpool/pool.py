"""Layer losses, premiums, and the asymptotic diversification-ratio formulas.

Participants are indexed from 0 and ordered so that participant 0 carries the
heaviest tail (smallest tail index) with relative scale 1; the factory methods
on :class:`TailModel` perform that normalization and record the permutation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .distributions import FrechetParams
from .errors import DegeneratePoolError

# Tail indices closer to 1 than this use the log-limit form of
# (lam**(1-a) - 1) / (1 - a).
_ALPHA_ONE_TOL = 1e-9


@dataclass(frozen=True)
class LayerSpec:
    """Coverage layer between an attachment point and a limit.

    Attributes:
        attachment: Loss level where coverage starts, >= 0.
        limit: Loss level where coverage is exhausted, >= attachment.
    """

    attachment: float
    limit: float

    def __post_init__(self):
        if self.attachment < 0:
            raise ValueError(f"attachment must be >= 0, got {self.attachment}")
        if self.attachment > self.limit:
            raise ValueError(
                f"attachment {self.attachment} exceeds limit {self.limit}")

    @property
    def width(self) -> float:
        return self.limit - self.attachment


@dataclass(frozen=True)
class LambdaVector:
    """Layer-width multipliers, one per participant, each strictly > 1."""

    values: np.ndarray

    def __init__(self, values):
        arr = np.atleast_1d(np.asarray(values, dtype=float)).copy()
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("lambdas must be a nonempty 1-d vector")
        if not np.all(arr > 1.0):
            raise ValueError(f"every lambda must exceed 1, got {arr}")
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    def __len__(self):
        return self.values.size

    def __iter__(self):
        return iter(self.values)


def _as_lambda_array(lambdas, n: int) -> np.ndarray:
    values = lambdas.values if isinstance(lambdas, LambdaVector) else \
        np.atleast_1d(np.asarray(lambdas, dtype=float))
    if values.size != n:
        raise ValueError(
            f"lambda vector has length {values.size}, expected {n}")
    if not np.all(values > 1.0):
        raise ValueError(f"every lambda must exceed 1, got {values}")
    return values


@dataclass(frozen=True)
class TailModel:
    """Per-participant tail indices and scales plus the attachment multiplier.

    Attributes:
        alphas: Tail indices, participant 0 holding the minimum.
        thetas: Limiting tail-probability ratios relative to participant 0;
            exactly 0 for strictly lighter tails, in (0, 1] otherwise.
        xi: Common attachment multiplier, > 0.
        permutation: Original participant index for each position, recorded
            when a factory reordered the inputs.
    """

    alphas: np.ndarray
    thetas: np.ndarray
    xi: float
    permutation: Optional[tuple] = field(default=None, compare=False)

    def __init__(self, alphas, thetas, xi, permutation=None):
        alphas = np.atleast_1d(np.asarray(alphas, dtype=float)).copy()
        thetas = np.atleast_1d(np.asarray(thetas, dtype=float)).copy()
        if alphas.shape != thetas.shape or alphas.ndim != 1 or alphas.size == 0:
            raise ValueError("alphas and thetas must be equal-length vectors")
        if not np.all(alphas > 0):
            raise ValueError(f"tail indices must be positive, got {alphas}")
        if not xi > 0:
            raise ValueError(f"xi must be positive, got {xi}")
        if alphas[0] != alphas.min():
            raise ValueError(
                "participant 0 must carry the heaviest tail (minimum alpha); "
                "use TailModel.normalized to reorder")
        if thetas[0] != 1.0:
            raise ValueError(f"thetas[0] must be 1, got {thetas[0]}")
        if np.any(thetas < 0) or np.any(thetas > 1):
            raise ValueError(f"thetas must lie in [0, 1], got {thetas}")
        lighter = alphas > alphas[0]
        if np.any(thetas[lighter] != 0):
            raise ValueError("lighter-tailed participants must have theta 0")
        if np.any(thetas[~lighter] <= 0):
            raise ValueError(
                "participants sharing the minimum alpha must have theta > 0")
        alphas.flags.writeable = False
        thetas.flags.writeable = False
        object.__setattr__(self, "alphas", alphas)
        object.__setattr__(self, "thetas", thetas)
        object.__setattr__(self, "xi", float(xi))
        object.__setattr__(self, "permutation",
                           tuple(permutation) if permutation is not None else None)

    @property
    def n(self) -> int:
        return self.alphas.size

    @classmethod
    def normalized(cls, alphas, thetas, xi) -> "TailModel":
        """Build a model from unordered inputs.

        ``thetas`` are tail-probability ratios against any common reference;
        participants are reordered so the heaviest tail (ties broken by the
        largest scale) comes first, and scales are rescaled to that pivot.
        """
        alphas = np.atleast_1d(np.asarray(alphas, dtype=float))
        thetas = np.atleast_1d(np.asarray(thetas, dtype=float))
        if alphas.shape != thetas.shape:
            raise ValueError("alphas and thetas must be equal-length vectors")
        a_min = alphas.min()
        heaviest = np.flatnonzero(alphas == a_min)
        pivot = heaviest[np.argmax(thetas[heaviest])]
        if thetas[pivot] <= 0:
            raise ValueError("the heaviest-tailed participant needs theta > 0")
        order = [int(pivot)] + [i for i in range(alphas.size) if i != pivot]
        new_alphas = alphas[order]
        new_thetas = np.where(new_alphas == a_min, thetas[order] / thetas[pivot],
                              0.0)
        return cls(new_alphas, new_thetas, xi, permutation=order)

    @classmethod
    def from_frechet(cls, params: Sequence[FrechetParams], xi) -> "TailModel":
        """Model implied by concrete Frechet laws: theta_i = (s_i/s_0)**alpha
        for equal tail indices and 0 for strictly lighter tails."""
        alphas = np.array([p.alpha for p in params], dtype=float)
        a_min = alphas.min()
        scales = np.array([p.scale for p in params], dtype=float)
        ref = scales[alphas == a_min].max()
        thetas = np.where(alphas == a_min, (scales / ref) ** a_min, 0.0)
        return cls.normalized(alphas, thetas, xi)


@dataclass(frozen=True)
class FeasibleBox:
    """Per-coordinate bounds of the asymptotically optimal lambda set.

    ``upper`` entries are ``inf`` for lighter-tailed participants; they are
    kept as genuine infinities, never finite sentinels.
    """

    lower: np.ndarray
    upper: np.ndarray

    def __init__(self, lower, upper):
        lower = np.atleast_1d(np.asarray(lower, dtype=float)).copy()
        upper = np.atleast_1d(np.asarray(upper, dtype=float)).copy()
        if lower.shape != upper.shape or lower.ndim != 1:
            raise ValueError("lower and upper must be equal-length vectors")
        if np.any(lower > upper):
            raise ValueError("box has lower > upper")
        lower.flags.writeable = False
        upper.flags.writeable = False
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def dim(self) -> int:
        return self.lower.size

    def contains(self, point) -> bool:
        point = np.asarray(point, dtype=float)
        return bool(np.all(point >= self.lower) and np.all(point <= self.upper))


@dataclass(frozen=True)
class AsymptoticDr:
    """Limit diversification ratios and the pool-level residual term.

    Attributes:
        values: Per-participant limit DR.
        delta_pool: Residual pool risk; 0 exactly when ``z_indices`` is empty.
        z_indices: Participants whose layer cap exceeds the benchmark risk.
    """

    values: np.ndarray
    delta_pool: float
    z_indices: frozenset


def layer_loss(x, layer: LayerSpec):
    """Loss ceded to the layer: 0 below attachment, capped at the width.

    Accepts scalars or arrays and preserves the input shape.
    """
    x = np.asarray(x, dtype=float)
    out = np.clip(x - layer.attachment, 0.0, layer.width)
    return out if out.ndim else float(out)


def premium_shares(expected_layers, var_of_pool: float) -> np.ndarray:
    """Split the pool risk proportionally to expected layer losses.

    The shares sum to ``var_of_pool``; a pool whose expected layers are all
    zero has no basis for sharing and raises :class:`DegeneratePoolError`.
    """
    expected = np.atleast_1d(np.asarray(expected_layers, dtype=float))
    if np.any(expected < 0):
        raise ValueError(f"expected layer losses must be >= 0, got {expected}")
    total = expected.sum()
    if total == 0:
        raise DegeneratePoolError(
            "all expected layer losses are zero; premium shares undefined")
    return expected * (var_of_pool / total)


def z_set(model: TailModel, lambdas) -> frozenset:
    """Participants j with theta_j > 0 and xi > theta_j**(-1/a1) / (lambda_j - 1).

    The inequality is strict; equality leaves j out, and theta_j = 0 keeps the
    threshold at infinity.
    """
    lam = _as_lambda_array(lambdas, model.n)
    a1 = model.alphas[0]
    members = []
    for j in range(model.n):
        theta = model.thetas[j]
        if theta <= 0:
            continue
        threshold = theta ** (-1.0 / a1) / (lam[j] - 1.0)
        if model.xi > threshold:
            members.append(j)
    return frozenset(members)


def pool_delta(model: TailModel, lambdas) -> float:
    """Residual pool risk (sum over the z-set of (theta**(-1/a1)+xi)**(-a1))**(1/a1)."""
    members = z_set(model, lambdas)
    if not members:
        return 0.0
    a1 = model.alphas[0]
    total = sum((model.thetas[j] ** (-1.0 / a1) + model.xi) ** (-a1)
                for j in sorted(members))
    return total ** (1.0 / a1)


def _width_integral(lam: float, alpha: float) -> float:
    """(lam**(1-alpha) - 1) / (1 - alpha), read as ln(lam) at alpha = 1."""
    if abs(1.0 - alpha) < _ALPHA_ONE_TOL:
        return math.log(lam)
    return (lam ** (1.0 - alpha) - 1.0) / (1.0 - alpha)


def asymptotic_dr(model: TailModel, lambdas) -> AsymptoticDr:
    """Limit diversification ratio of each participant.

    The retained part follows the three-branch comparison of
    ``xi**(a1/alpha_i)`` against 1 and ``1/lambda_i``; the pooled part couples
    the participants through the positive weights delta_i times the shared
    residual term. With equal tail indices the weights reduce exactly to the
    tail-equivalent form.
    """
    lam = _as_lambda_array(lambdas, model.n)
    a1 = model.alphas[0]
    xi = model.xi
    members = z_set(model, lam)
    delta_pool = pool_delta(model, lam)

    denom = sum(_width_integral(lam[j], a1) * model.thetas[j] ** (1.0 / a1)
                for j in range(model.n))
    values = np.empty(model.n)
    for i in range(model.n):
        ratio = xi ** (a1 / model.alphas[i])
        if ratio >= 1.0:
            base = 1.0
        elif ratio >= 1.0 / lam[i]:
            base = ratio
        else:
            base = 1.0 - (lam[i] - 1.0) * ratio
        weight = (_width_integral(lam[i], model.alphas[i])
                  * xi ** (a1 / model.alphas[i] - 1.0) / denom)
        values[i] = base + weight * delta_pool
    return AsymptoticDr(values=values, delta_pool=delta_pool, z_indices=members)


def feasible_box(model: TailModel) -> FeasibleBox:
    """Bounds on lambda attaining every participant's minimal limit DR.

    Lower bound is ``xi**(-a1/alpha_i)`` capped below at 1 (the layer must be
    wider than the attachment); upper bound is ``1 + theta_i**(-1/a1)/xi``,
    infinite for lighter-tailed participants.
    """
    a1 = model.alphas[0]
    lower = np.maximum(model.xi ** (-a1 / model.alphas), 1.0)
    with np.errstate(divide="ignore"):
        upper = np.where(model.thetas > 0,
                         1.0 + np.where(model.thetas > 0, model.thetas, 1.0)
                         ** (-1.0 / a1) / model.xi,
                         np.inf)
    return FeasibleBox(lower=lower, upper=upper)


def distance_to_box(point, box: FeasibleBox) -> float:
    """Euclidean distance from a point to the axis-aligned box.

    Clamping each coordinate into its interval is the exact projection, so the
    minimum over the box is closed-form. Coordinates with infinite upper bound
    only contribute from below.
    """
    point = np.atleast_1d(np.asarray(point, dtype=float))
    if point.size != box.dim:
        raise ValueError(
            f"point has dimension {point.size}, box has {box.dim}")
    projected = np.clip(point, box.lower, box.upper)
    return float(np.linalg.norm(point - projected))


def attachment_from_var(model: TailModel, i: int, var_i: float) -> float:
    """Attachment point ``xi**(a1/alpha_i) * var_i`` for participant ``i``."""
    a1 = model.alphas[0]
    return model.xi ** (a1 / model.alphas[i]) * var_i
