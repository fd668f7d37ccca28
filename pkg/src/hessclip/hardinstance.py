"""Worst-case zero-chain construction behind the sample-complexity lower bound.

The base chain function on ``R^T`` is

    h(x) = -Psi(1) Phi(x_1) + sum_{i=2}^T [Psi(-x_{i-1}) Phi(-x_i) - Psi(x_{i-1}) Phi(x_i)]

with ``Psi(x) = exp(1 - 1/(2x-1)^2)`` for ``x > 1/2`` (zero otherwise) and
``Phi(x) = sqrt(e) * int_{-inf}^x exp(-t^2/2) dt``. The scaled instance is
``h*(x) = nu * h(beta * x)``.

The stochastic oracle multiplies every derivative coordinate beyond
``prog_{1/4}(x)`` by ``xi / rho`` with ``xi ~ Bernoulli(rho)``, so a query
uncovers the next coordinate of the chain only with probability ``rho``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .exceptions import ConfigurationError, ContractError
from .noise import NoiseKind, TailSpec
from .numerics import RandomSource, as_vector
from .problems import StochasticOracle

SQRT_E = math.sqrt(math.e)
PHI_SCALE = math.sqrt(2.0 * math.pi * math.e)  # Phi(+inf)
DELTA0 = 12.0
ELL0 = 23.0
# Rounded up from estimate_lipschitz_constants(grid=801, n_dirs=361), which gives
# 268.0 and 3758.8. Numerical estimates, not proven bounds.
ELL1_DEFAULT = 270.0
ELL2_DEFAULT = 3800.0


def psi(x):
    """Smooth switch: 0 for x <= 1/2, ``exp(1 - 1/(2x-1)^2)`` above."""
    return _psi_derivs(x, 0)


def phi(x):
    """``sqrt(e) * int_{-inf}^x exp(-t^2/2) dt``, via the normal CDF."""
    return PHI_SCALE * ndtr(x)


def _psi_all(x, max_order: int) -> list:
    """``[Psi(x), Psi'(x), ...]`` up to ``max_order`` (at most 3), sharing one exp."""
    if not 0 <= max_order <= 3:
        raise ValueError("order must be 0..3")
    x = np.asarray(x, dtype=np.float64)
    outs = [np.zeros_like(x) for _ in range(max_order + 1)]
    mask = x > 0.5
    if not mask.any():
        return outs
    u = 2.0 * x[mask] - 1.0
    base = np.exp(1.0 - 1.0 / (u * u))
    # exp underflows to exactly 0 long before the polynomial factor overflows
    live = base != 0.0
    w = np.where(live, 1.0 / np.where(live, u, 1.0), 0.0)
    w2 = w * w
    polys = (1.0, 4.0 * w2 * w, w2 * w2 * (16.0 * w2 - 24.0),
             w2 * w2 * w * (64.0 * w2 * w2 - 288.0 * w2 + 192.0))
    for k in range(max_order + 1):
        outs[k][mask] = base * polys[k]
    return outs


def _psi_derivs(x, order: int):
    out = _psi_all(x, order)[order]
    return out if out.ndim else float(out)


def _phi_all(x, max_order: int) -> list:
    x = np.asarray(x, dtype=np.float64)
    d1 = SQRT_E * np.exp(-0.5 * x * x)
    outs = [PHI_SCALE * ndtr(x), d1, -x * d1, (x * x - 1.0) * d1]
    if not 0 <= max_order <= 3:
        raise ValueError("order must be 0..3")
    return outs[: max_order + 1]


def _phi_derivs(x, order: int):
    return _phi_all(x, order)[order]


def _pair_partials(a, b):
    """First and second partials of ``Psi(-a)Phi(-b) - Psi(a)Phi(b)``."""
    P, Pm = _psi_all(a, 2), _psi_all(-a, 2)
    F, Fm = _phi_all(b, 2), _phi_all(-b, 2)
    da = -Pm[1] * Fm[0] - P[1] * F[0]
    db = -Pm[0] * Fm[1] - P[0] * F[1]
    daa = Pm[2] * Fm[0] - P[2] * F[0]
    dab = Pm[1] * Fm[1] - P[1] * F[1]
    dbb = Pm[0] * Fm[2] - P[0] * F[2]
    return da, db, daa, dab, dbb


def _pair_third_partials(a, b):
    P, Pm = _psi_all(a, 3), _psi_all(-a, 3)
    F, Fm = _phi_all(b, 3), _phi_all(-b, 3)
    daaa = -Pm[3] * Fm[0] - P[3] * F[0]
    daab = -Pm[2] * Fm[1] - P[2] * F[1]
    dabb = -Pm[1] * Fm[2] - P[1] * F[2]
    dbbb = -Pm[0] * Fm[3] - P[0] * F[3]
    return daaa, daab, dabb, dbbb


def base_value(x) -> float:
    x = np.asarray(x, dtype=np.float64)
    val = -psi(1.0) * phi(x[0])
    if x.size > 1:
        a, b = x[:-1], x[1:]
        val += np.sum(_psi_derivs(-a, 0) * phi(-b) - _psi_derivs(a, 0) * phi(b))
    return float(val)


def _base_derivs(x, hessian: bool = True):
    """Gradient and Hessian bands of ``h`` from one pass over the pair terms.

    ``Psi(1) = 1``, so the leading term contributes ``-Phi^(k)(x_1)``.
    """
    x = np.asarray(x, dtype=np.float64)
    g = np.zeros_like(x)
    diag = np.zeros_like(x)
    off = np.zeros(x.size - 1)
    lead = _phi_all(x[0], 2)
    g[0] = -lead[1]
    diag[0] = -lead[2]
    if x.size > 1:
        da, db, daa, dab, dbb = _pair_partials(x[:-1], x[1:])
        g[:-1] += da
        g[1:] += db
        diag[:-1] += daa
        diag[1:] += dbb
        off[:] = dab
    return g, diag, off


def base_gradient(x) -> np.ndarray:
    return _base_derivs(x)[0]


def base_hessian_bands(x):
    """Diagonal and first off-diagonal of the (tridiagonal) Hessian."""
    _, diag, off = _base_derivs(x)
    return diag, off


def _band_product(diag, off, v) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    out = diag * v
    out[:-1] += off * v[1:]
    out[1:] += off * v[:-1]
    return out


def base_hvp(x, v) -> np.ndarray:
    return _band_product(*base_hessian_bands(x), v)


def base_hessian(x) -> np.ndarray:
    diag, off = base_hessian_bands(x)
    return np.diag(diag) + np.diag(off, 1) + np.diag(off, -1)


def prog(x, threshold: float = 0.0) -> int:
    """Largest 1-based index with ``|x_i| > threshold``; 0 if there is none."""
    if threshold < 0:
        raise ContractError("threshold must be >= 0")
    idx = np.flatnonzero(np.abs(np.asarray(x, dtype=np.float64)) > threshold)
    return int(idx[-1] + 1) if idx.size else 0


@dataclass(frozen=True)
class ChainFunction:
    """``h*(x) = nu * h(beta * x)`` on ``R^T_dim``."""

    T_dim: int
    nu: float = 1.0
    beta: float = 1.0

    def __post_init__(self):
        if int(self.T_dim) < 1:
            raise ContractError("T_dim must be >= 1")
        if not (self.nu > 0 and self.beta > 0):
            raise ContractError("nu and beta must be positive")

    def _check(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.T_dim,):
            raise ContractError(f"expected a vector of length {self.T_dim}, got shape {x.shape}")
        return x

    def value(self, x) -> float:
        return self.nu * base_value(self.beta * self._check(x))

    def gradient(self, x) -> np.ndarray:
        return self.nu * self.beta * base_gradient(self.beta * self._check(x))

    def hvp(self, x, v) -> np.ndarray:
        return self.nu * self.beta**2 * base_hvp(self.beta * self._check(x), v)

    def hessian(self, x) -> np.ndarray:
        return self.nu * self.beta**2 * base_hessian(self.beta * self._check(x))

    def gradient_and_hvp(self, x, v):
        """Both derivatives at ``x`` from a single evaluation of the pair terms."""
        g, diag, off = _base_derivs(self.beta * self._check(x))
        return self.nu * self.beta * g, self.nu * self.beta**2 * _band_product(diag, off, v)


def chain_value(c: ChainFunction, x) -> float:
    return c.value(x)


def chain_gradient(c: ChainFunction, x) -> np.ndarray:
    return c.gradient(x)


def chain_hvp(c: ChainFunction, x, v) -> np.ndarray:
    return c.hvp(x, v)


@dataclass(frozen=True)
class ZeroChainOracle:
    """Bernoulli zero-chain estimator for the derivatives of ``chain``."""

    chain: ChainFunction
    rho: float = 1.0
    order: int = 2

    def __post_init__(self):
        if not 0 < self.rho <= 1:
            raise ContractError("rho must lie in (0, 1]")
        if self.order not in (1, 2):
            raise ContractError("only first- and second-order oracles are supported")

    def _scales(self, x, xi: int) -> np.ndarray:
        k = prog(self.chain.beta * x, 0.25)
        s = np.ones(self.chain.T_dim)
        s[k:] = xi / self.rho
        return s

    def query(self, x, r: RandomSource, v=None):
        """One query: a single Bernoulli draw shared by the gradient and the HVP."""
        x = as_vector(x, self.chain.T_dim, name="x")
        xi = int(r.generator.random() < self.rho)
        s = self._scales(x, xi)
        if v is None:
            return s * self.chain.gradient(x), None
        if self.order < 2:
            raise ContractError("first-order oracle cannot return Hessian-vector products")
        grad, hv = self.chain.gradient_and_hvp(x, v)
        return s * grad, s * hv


def zero_chain_query(o: ZeroChainOracle, x, r: RandomSource, v=None):
    return o.query(x, r, v)


class ChainOracle(StochasticOracle):
    """Adapter exposing a :class:`ZeroChainOracle` through the optimizer interface.

    Gradient and HVP requests are separate oracle queries, each with its own
    Bernoulli draw. When ``record`` is true, the support index ``prog(reply)``
    of each reply is appended to ``replies``.
    """

    name = "zero-chain"

    def __init__(self, zco: ZeroChainOracle, record: bool = False):
        super().__init__(zco.chain.T_dim, TailSpec(NoiseKind.BERNOULLI_ZERO_CHAIN), TailSpec.none())
        self.zco = zco
        self.record = record
        self.replies: list[int] = []
        self.query_points: list[np.ndarray] = []
        self.F_star = None
        self.L = None

    def exact_value(self, x):
        return self.zco.chain.value(x)

    def exact_gradient(self, x):
        return self.zco.chain.gradient(x)

    def exact_hessian(self, x):
        return self.zco.chain.hessian(x)

    def exact_hvp(self, x, v):
        return self.zco.chain.hvp(x, v)

    def _log(self, x, reply):
        if self.record:
            self.replies.append(prog(reply))
            self.query_points.append(np.array(x, dtype=np.float64))

    def noisy_gradient(self, x, r):
        g, _ = self.zco.query(x, r)
        self._log(x, g)
        return g

    def noisy_hvp(self, x, v, r):
        x = as_vector(x, self.d, name="x")
        xi = int(r.generator.random() < self.zco.rho)
        hv = self.zco._scales(x, xi) * self.zco.chain.hvp(x, v)
        self._log(x, hv)
        return hv


def lipschitz_bound(q: int, c: float) -> float:
    """``exp(2.5 q log q + c q)``: the generic bound on ``ell_q``."""
    return math.exp(2.5 * q * math.log(q) + c * q) if q > 0 else ELL0


def estimate_lipschitz_constants(grid: int = 241, span: float = 3.0, n_dirs: int = 181) -> tuple[float, float]:
    """Grid estimates of ``ell_1 = sup ||hess h||`` and ``ell_2 = sup ||D^3 h||``.

    Every coordinate of ``h`` enters at most two adjacent pair terms (plus the
    leading ``Phi(x_1)`` term), so splitting the sum into even and odd pair
    terms bounds each operator norm by twice the largest 2-variable block
    norm, plus the leading-term contribution. Both blocks are evaluated on a
    square grid over ``[-span, span]^2``; the functions are constant in each
    variable outside ``[-1.5, 1.5]`` up to exponentially small tails.
    """
    t = np.linspace(-span, span, grid)
    a, b = np.meshgrid(t, t, indexing="ij")
    a, b = a.ravel(), b.ravel()
    _, _, daa, dab, dbb = _pair_partials(a, b)
    tr, det = daa + dbb, daa * dbb - dab * dab
    disc = np.sqrt(np.maximum(tr * tr / 4.0 - det, 0.0))
    block2 = np.max(np.maximum(np.abs(tr / 2.0 + disc), np.abs(tr / 2.0 - disc)))
    lead2 = psi(1.0) * np.max(np.abs(_phi_derivs(t, 2)))
    ell1 = 2.0 * block2 + lead2

    aaa, aab, abb, bbb = _pair_third_partials(a, b)
    th = np.linspace(0.0, np.pi, n_dirs)
    c, s = np.cos(th)[:, None], np.sin(th)[:, None]
    cubic = c**3 * aaa + 3 * c * c * s * aab + 3 * c * s * s * abb + s**3 * bbb
    block3 = np.max(np.abs(cubic))
    lead3 = psi(1.0) * np.max(np.abs(_phi_derivs(t, 3)))
    ell2 = 2.0 * block3 + lead3
    return float(ell1), float(ell2)


@dataclass(frozen=True)
class ScaledInstance:
    chain: ChainFunction
    rho: float
    binding: str

    @property
    def oracle(self) -> ZeroChainOracle:
        return ZeroChainOracle(self.chain, self.rho)


def rescale_for_target(Delta: float, L_list, sigma_list, epsilon: float, p: float,
                       ells=(ELL0, ELL1_DEFAULT, ELL2_DEFAULT)) -> ScaledInstance:
    """Scale the chain so it is ``Delta``-bounded, ``L``-smooth, has noise
    moments below ``sigma`` and no ``epsilon``-stationary point reachable early.

    ``L_list[r-1]`` is the Lipschitz constant of the r-th derivative and
    ``sigma_list[r-1]`` the p-th moment scale of the r-th derivative
    estimator, for ``r = 1..q`` with ``q = len(L_list) <= 2``.
    """
    L_list, sigma_list = list(L_list), list(sigma_list)
    q = len(L_list)
    if q not in (1, 2) or len(sigma_list) != q:
        raise ContractError("L_list and sigma_list must have the same length, 1 or 2")
    if not (Delta > 0 and epsilon > 0 and 1 < p <= 2):
        raise ContractError("need Delta > 0, epsilon > 0 and p in (1, 2]")
    ell = list(ells)
    candidates = {}
    for r in range(2, q + 1):
        candidates[f"sigma_{r}"] = (ell[0] * sigma_list[r - 1] / (ell[r - 1] * sigma_list[0])) ** (1.0 / (r - 1))
    for r in range(1, q + 1):
        candidates[f"L_{r}"] = (L_list[r - 1] / (2.0 * epsilon * ell[r])) ** (1.0 / r)
    binding = min(candidates, key=candidates.get)
    beta = candidates[binding]
    nu = 2.0 * epsilon / beta
    T_dim = math.floor(Delta * beta / (2.0 * DELTA0 * epsilon))
    if T_dim < 1:
        raise ConfigurationError(
            f"instance infeasible: T_dim = {T_dim} < 1 (beta bound by {binding}; Delta too small for epsilon)"
        )
    e = p / (p - 1.0)
    rho = min((epsilon / sigma_list[0]) ** e * 2.0 ** ((p + 1.0) / (p - 1.0)) * ell[0] ** e, 1.0)
    return ScaledInstance(ChainFunction(T_dim, nu, beta), rho, binding)
