"""Stochastic first/second-order oracles and the built-in test problems."""

from __future__ import annotations

import numpy as np

from .exceptions import ContractError
from .noise import TailSpec, sample_noise_matrix, sample_noise_vector
from .numerics import RandomSource, as_vector


class StochasticOracle:
    """Problem interface consumed by the optimizers.

    Subclasses implement ``exact_value``, ``exact_gradient`` and
    ``exact_hessian``; :meth:`exact_hvp` may be overridden when a cheaper
    product exists. The noisy queries add independent draws from ``noise`` and
    ``hessian_noise`` so that both are unbiased by construction.

    Attributes
    ----------
    d : int
        Dimension.
    L : float or None
        Lipschitz constant of the gradient, if declared.
    F_star : float or None
        Lower bound on the objective, if declared.
    L_h : float or None
        Lipschitz constant of the Hessian, if declared.
    """

    name = "oracle"
    L: float | None = None
    F_star: float | None = None
    L_h: float | None = None

    def __init__(self, d: int, noise: TailSpec | None = None, hessian_noise: TailSpec | None = None):
        if int(d) < 1:
            raise ContractError("dimension must be >= 1")
        self.d = int(d)
        self.noise = noise if noise is not None else TailSpec.none()
        self.hessian_noise = hessian_noise if hessian_noise is not None else TailSpec.none()

    def exact_value(self, x) -> float:
        raise NotImplementedError

    def exact_gradient(self, x) -> np.ndarray:
        raise NotImplementedError

    def exact_hessian(self, x) -> np.ndarray:
        raise NotImplementedError

    def exact_hvp(self, x, v) -> np.ndarray:
        return self.exact_hessian(x) @ v

    def noisy_gradient(self, x, r: RandomSource) -> np.ndarray:
        """One stochastic gradient; consumes exactly one sample."""
        x = as_vector(x, self.d, name="x")
        g = self.exact_gradient(x)
        if self.noise.is_none:
            return g
        return g + sample_noise_vector(self.noise, self.d, r)

    def noisy_hvp(self, x, v, r: RandomSource) -> np.ndarray:
        """One stochastic Hessian-vector product; consumes exactly one sample."""
        x = as_vector(x, self.d, name="x")
        v = as_vector(v, self.d, name="v")
        hv = self.exact_hvp(x, v)
        if self.hessian_noise.is_none:
            return hv
        return hv + sample_noise_matrix(self.hessian_noise, self.d, r) @ v

    def gap(self, x) -> float:
        """``F(x) - F_star``; requires a declared ``F_star``."""
        if self.F_star is None:
            raise ContractError(f"{self.name} does not declare F_star")
        return self.exact_value(x) - self.F_star

    def describe(self) -> dict:
        return {
            "problem": self.name,
            "d": self.d,
            "noise": self.noise.kind.value,
            "tail_index": self.noise.tail_index,
            "noise_scale": self.noise.scale,
            "hessian_noise": self.hessian_noise.kind.value,
        }


class QuadraticProblem(StochasticOracle):
    """``F(x) = 0.5 * ||x||**2`` with identity Hessian, ``L = 1`` and ``F_star = 0``."""

    name = "quadratic"
    L = 1.0
    F_star = 0.0
    L_h = 0.0

    def __init__(self, d: int = 10, noise: TailSpec | None = None, hessian_noise: TailSpec | None = None):
        super().__init__(d, noise, hessian_noise)

    def exact_value(self, x) -> float:
        x = np.asarray(x, dtype=np.float64)
        return 0.5 * float(x @ x)

    def exact_gradient(self, x) -> np.ndarray:
        return np.array(x, dtype=np.float64)

    def exact_hessian(self, x) -> np.ndarray:
        return np.eye(self.d)

    def exact_hvp(self, x, v) -> np.ndarray:
        return np.array(v, dtype=np.float64)


class WellsProblem(StochasticOracle):
    """Nonconvex ``F(x) = sum(x_i**2 / (1 + x_i**2)) + 0.5 * tether * ||x||**2``.

    Each well has curvature in ``[-1/2, 2]``, so ``L = 2 + tether``; the
    unique minimizer is the origin with ``F_star = 0``.
    """

    name = "wells"
    F_star = 0.0

    def __init__(self, d: int = 10, noise: TailSpec | None = None,
                 hessian_noise: TailSpec | None = None, tether: float = 0.05):
        super().__init__(d, noise, hessian_noise)
        if tether < 0:
            raise ContractError("tether must be nonnegative")
        self.tether = float(tether)
        self.L = 2.0 + self.tether

    def exact_value(self, x) -> float:
        x = np.asarray(x, dtype=np.float64)
        s = x * x
        return float(np.sum(s / (1.0 + s)) + 0.5 * self.tether * np.sum(s))

    def exact_gradient(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        return 2.0 * x / (1.0 + x * x) ** 2 + self.tether * x

    def _curvature(self, x) -> np.ndarray:
        s = x * x
        return (2.0 - 6.0 * s) / (1.0 + s) ** 3 + self.tether

    def exact_hessian(self, x) -> np.ndarray:
        return np.diag(self._curvature(np.asarray(x, dtype=np.float64)))

    def exact_hvp(self, x, v) -> np.ndarray:
        return self._curvature(np.asarray(x, dtype=np.float64)) * np.asarray(v, dtype=np.float64)


class CubicProblem(StochasticOracle):
    """``F(x) = 0.5 * ||x||**2 + (c / 6) * sum(x_i**3)``.

    The Hessian varies linearly in ``x``, which makes the random-interpolation
    Hessian correction exact only in expectation. Not bounded below, so no
    ``F_star`` or ``L`` is declared and schedules cannot be derived for it.
    """

    name = "cubic"

    def __init__(self, d: int = 4, c: float = 1.0, noise: TailSpec | None = None,
                 hessian_noise: TailSpec | None = None):
        super().__init__(d, noise, hessian_noise)
        self.c = float(c)

    def exact_value(self, x) -> float:
        x = np.asarray(x, dtype=np.float64)
        return float(0.5 * x @ x + self.c / 6.0 * np.sum(x**3))

    def exact_gradient(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        return x + 0.5 * self.c * x * x

    def exact_hessian(self, x) -> np.ndarray:
        return np.diag(1.0 + self.c * np.asarray(x, dtype=np.float64))

    def exact_hvp(self, x, v) -> np.ndarray:
        return (1.0 + self.c * np.asarray(x, dtype=np.float64)) * np.asarray(v, dtype=np.float64)


class CountingOracle(StochasticOracle):
    """Wrap an oracle and count the noisy queries made through it."""

    def __init__(self, inner: StochasticOracle):
        self.inner = inner
        self.d = inner.d
        self.noise = inner.noise
        self.hessian_noise = inner.hessian_noise
        self.name = inner.name
        self.L, self.F_star, self.L_h = inner.L, inner.F_star, inner.L_h
        self.gradient_calls = 0
        self.hvp_calls = 0

    def exact_value(self, x):
        return self.inner.exact_value(x)

    def exact_gradient(self, x):
        return self.inner.exact_gradient(x)

    def exact_hessian(self, x):
        return self.inner.exact_hessian(x)

    def exact_hvp(self, x, v):
        return self.inner.exact_hvp(x, v)

    def noisy_gradient(self, x, r):
        self.gradient_calls += 1
        return self.inner.noisy_gradient(x, r)

    def noisy_hvp(self, x, v, r):
        self.hvp_calls += 1
        return self.inner.noisy_hvp(x, v, r)

    @property
    def samples(self) -> int:
        return self.gradient_calls + self.hvp_calls


def noisy_gradient(p: StochasticOracle, x, r: RandomSource) -> np.ndarray:
    return p.noisy_gradient(x, r)


def noisy_hvp(p: StochasticOracle, x, v, r: RandomSource) -> np.ndarray:
    return p.noisy_hvp(x, v, r)


def finite_difference_gradient(p, x, h: float = 1e-5) -> np.ndarray:
    """Central-difference gradient of ``p.exact_value`` (or of a plain callable)."""
    if not h > 0:
        raise ContractError("finite-difference step must be positive")
    f = p.exact_value if hasattr(p, "exact_value") else p
    x = np.asarray(x, dtype=np.float64)
    g = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (f(x + e) - f(x - e)) / (2.0 * h)
    return g


PROBLEMS = {
    "quadratic": QuadraticProblem,
    "wells": WellsProblem,
    "cubic": CubicProblem,
}
