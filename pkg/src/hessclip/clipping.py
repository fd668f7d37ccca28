"""Norm clipping of vectors and of stepsize-rescaled Hessian-vector products."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import ContractError
from .numerics import euclidean_norm


def _check_level(level: float, name: str) -> float:
    level = float(level)
    if not level > 0:  # also rejects NaN
        raise ContractError(f"{name} must be > 0, got {level}")
    return level


@dataclass(frozen=True)
class ClipLevels:
    """Gradient threshold ``lam`` and rescaled HVP threshold ``lam_h_bar``.

    The effective HVP threshold at stepsize ``gamma`` is ``gamma * lam_h_bar``.
    """

    lam: float
    lam_h_bar: float

    def __post_init__(self):
        for name in ("lam", "lam_h_bar"):
            value = _check_level(getattr(self, name), name)
            if not math.isfinite(value):
                raise ContractError(f"{name} must be finite")

    def lam_h(self, gamma: float) -> float:
        return gamma * self.lam_h_bar


def clip(v, level: float) -> np.ndarray:
    """Scale ``v`` onto the ball of radius ``level`` if it lies outside.

    ``clip(0, level)`` is ``0``.
    """
    return clip_with_flag(v, level)[0]


def _shrink_onto_ball(v: np.ndarray, nv: float, level: float) -> np.ndarray:
    # level / nv rounds up about a tenth of the time; step the factor down
    # until the rounded norm respects the bound exactly
    scale = level / nv
    out = scale * v
    while euclidean_norm(out) > level:
        scale = np.nextafter(scale, 0.0)
        out = scale * v
    return out


def clip_with_flag(v, level: float) -> tuple[np.ndarray, bool]:
    """Like :func:`clip`, also reporting whether the vector was rescaled."""
    level = _check_level(level, "clip level")
    v = np.asarray(v, dtype=np.float64)
    nv = euclidean_norm(v)
    if nv <= level:
        return v, False
    return _shrink_onto_ball(v, nv, level), True


def clip_hvp(hv, gamma: float, lam_h_bar: float) -> np.ndarray:
    """``gamma * clip(hv / gamma, lam_h_bar)``, evaluated as ``clip(hv, gamma * lam_h_bar)``.

    The single-rescale form avoids dividing by a tiny stepsize.
    """
    gamma = _check_level(gamma, "gamma")
    lam_h_bar = _check_level(lam_h_bar, "lam_h_bar")
    return clip(hv, gamma * lam_h_bar)


def clip_hvp_with_flag(hv, gamma: float, lam_h_bar: float) -> tuple[np.ndarray, bool]:
    gamma = _check_level(gamma, "gamma")
    lam_h_bar = _check_level(lam_h_bar, "lam_h_bar")
    return clip_with_flag(hv, gamma * lam_h_bar)
