"""Heavy- and light-tailed perturbation samplers and empirical moment checks.

The two-sided Pareto variable is ``S * s * U**(-1/tail_index)`` with ``S`` a
fair sign and ``U`` uniform on (0, 1]. It is symmetric, ``|X| >= s``, and

    E|X|**q = s**q * tail_index / (tail_index - q)     for q < tail_index,

infinite otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .exceptions import ContractError
from .numerics import RandomSource, symmetrize


class NoiseKind(str, Enum):
    PARETO = "two-sided-pareto"
    GAUSSIAN = "gaussian"
    BERNOULLI_ZERO_CHAIN = "bernoulli-zero-chain"
    NONE = "none"


@dataclass(frozen=True)
class TailSpec:
    """Declarative description of a noise source.

    ``tail_index`` is only meaningful for the Pareto kind. For the Gaussian
    kind ``scale`` is the per-coordinate standard deviation. The
    ``bernoulli-zero-chain`` kind is realized by the hard-instance oracle and
    cannot be sampled here.
    """

    kind: NoiseKind = NoiseKind.NONE
    tail_index: float = 2.0
    scale: float = 1.0
    per_coordinate: bool = True

    def __post_init__(self):
        object.__setattr__(self, "kind", NoiseKind(self.kind))
        if not self.scale > 0 or not math.isfinite(self.scale):
            raise ContractError(f"noise scale must be positive and finite, got {self.scale}")
        if self.kind is NoiseKind.PARETO and not self.tail_index > 1:
            raise ContractError(
                f"two-sided Pareto needs tail_index > 1 for a finite mean, got {self.tail_index}"
            )

    @classmethod
    def none(cls) -> "TailSpec":
        return cls(NoiseKind.NONE)

    @classmethod
    def pareto(cls, tail_index: float, scale: float = 1.0, per_coordinate: bool = True) -> "TailSpec":
        return cls(NoiseKind.PARETO, tail_index, scale, per_coordinate)

    @classmethod
    def gaussian(cls, scale: float = 1.0) -> "TailSpec":
        return cls(NoiseKind.GAUSSIAN, 2.0, scale, True)

    @property
    def is_none(self) -> bool:
        return self.kind is NoiseKind.NONE

    def pareto_abs_moment(self, q: float) -> float:
        """Closed-form E|X|**q of the scalar Pareto draw (``inf`` when q >= tail_index)."""
        if self.kind is not NoiseKind.PARETO:
            raise ContractError("closed-form moments are defined for the Pareto kind only")
        if q >= self.tail_index:
            return math.inf
        return self.scale**q * self.tail_index / (self.tail_index - q)

    def sigma_bound(self, d: int, p: float) -> float:
        """An upper bound on ``(E||noise||**p)**(1/p)`` for the d-dimensional vector.

        For ``p <= 2`` and per-coordinate draws, ``||x||**p <= sum |x_i|**p``;
        the bound is therefore ``(d * E|X|**p)**(1/p)``.
        """
        if self.kind is NoiseKind.NONE:
            return 0.0
        if not 0 < p <= 2:
            raise ContractError("sigma_bound needs 0 < p <= 2")
        if self.kind is NoiseKind.GAUSSIAN:
            # E||x||^p <= (E||x||^2)^(p/2) = (d s^2)^(p/2) by Jensen
            return math.sqrt(d) * self.scale
        if self.per_coordinate:
            return (d * self.pareto_abs_moment(p)) ** (1.0 / p)
        return self.pareto_abs_moment(p) ** (1.0 / p)


def sample_two_sided_pareto(spec: TailSpec, r: RandomSource, size=None):
    """Draw from the two-sided Pareto law described by ``spec``."""
    if spec.kind is not NoiseKind.PARETO:
        raise ContractError(f"expected a two-sided Pareto spec, got {spec.kind.value}")
    g = r.generator
    u = 1.0 - g.random(size)  # (0, 1]
    sign = np.where(g.random(size) < 0.5, -1.0, 1.0)
    out = sign * spec.scale * u ** (-1.0 / spec.tail_index)
    return float(out) if size is None else out


def _scalar_draws(spec: TailSpec, n: int, r: RandomSource) -> np.ndarray:
    if spec.kind is NoiseKind.PARETO:
        return sample_two_sided_pareto(spec, r, n)
    if spec.kind is NoiseKind.GAUSSIAN:
        return spec.scale * r.generator.standard_normal(n)
    raise ContractError(f"noise kind {spec.kind.value} cannot be sampled directly")


def sample_noise_vector(spec: TailSpec, d: int, r: RandomSource) -> np.ndarray:
    """Zero-mean noise vector of length ``d``.

    Per-coordinate specs draw ``d`` independent scalars. Otherwise a single
    magnitude draw scales a uniformly random unit direction.
    """
    if d < 1:
        raise ContractError("dimension must be >= 1")
    if spec.kind is NoiseKind.NONE:
        return np.zeros(d)
    if spec.per_coordinate or spec.kind is NoiseKind.GAUSSIAN:
        return _scalar_draws(spec, d, r)
    magnitude = abs(sample_two_sided_pareto(spec, r))
    direction = r.generator.standard_normal(d)
    return magnitude * direction / np.linalg.norm(direction)


def sample_noise_matrix(spec: TailSpec, d: int, r: RandomSource) -> np.ndarray:
    """Symmetric zero-mean noise matrix ``(A + A.T) / 2`` with i.i.d. entries in ``A``."""
    if d < 1:
        raise ContractError("dimension must be >= 1")
    if spec.kind is NoiseKind.NONE:
        return np.zeros((d, d))
    A = _scalar_draws(spec, d * d, r).reshape(d, d)
    return symmetrize(A)


@dataclass(frozen=True)
class MomentEstimate:
    order: float
    value: float
    sample_count: int
    std_error: float


def estimate_moment(samples, order: float) -> MomentEstimate:
    """Empirical ``mean(|x|**order)`` with its jackknife standard error.

    For a sample mean the delete-one jackknife variance reduces to
    ``var(y, ddof=1) / n``, which is what is computed here.
    """
    y = np.abs(np.asarray(samples, dtype=np.float64).ravel())
    if y.size == 0:
        raise ContractError("estimate_moment needs at least one sample")
    if not order > 0:
        raise ContractError("moment order must be positive")
    y = y**order
    n = y.size
    se = float(np.std(y, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return MomentEstimate(float(order), float(y.mean()), int(n), se)


def median_of_means(samples, n_blocks: int = 20, axis: int = 0):
    """Median-of-means location estimate and a robust standard error.

    The standard error is ``1.2533 * MAD-scaled spread of block means /
    sqrt(n_blocks)`` (the asymptotic efficiency factor of the median).
    """
    x = np.asarray(samples, dtype=np.float64)
    x = np.moveaxis(x, axis, 0)
    n = x.shape[0] - x.shape[0] % n_blocks
    if n == 0:
        raise ContractError("need at least n_blocks samples")
    blocks = x[:n].reshape(n_blocks, n // n_blocks, *x.shape[1:]).mean(axis=1)
    center = np.median(blocks, axis=0)
    mad = 1.4826 * np.median(np.abs(blocks - center), axis=0)
    se = 1.2533 * mad / math.sqrt(n_blocks)
    return center, se
