"""Normalized momentum methods with optional Hessian correction and clipping.

Five methods share one normalized update ``x_{t+1} = x_t - gamma * g_t / ||g_t||``
and differ only in how the momentum ``g_t`` is formed:

============== =====================================================================
NSGD           ``g_t = grad f(x_t, xi_t)``
NSGDM          ``g_t = (1-a) g_{t-1} + a grad f(x_t, xi_t)``
ClipNSGDM      ``g_t = (1-a) g_{t-1} + a clip(grad f(x_t, xi_t), lam)``
NSGDHess       ``g_t = (1-a)(g_{t-1} + H(xh_t, xih_t)(x_t - x_{t-1})) + a grad f(x_t, xi_t)``
ClipNSGDHess   as NSGDHess with ``clip(H.., gamma*lam_h_bar)`` and ``clip(grad.., lam)``
============== =====================================================================

where ``xh_t = q_t x_t + (1 - q_t) x_{t-1}`` with ``q_t ~ U[0, 1)``.

Each method is exposed both as a step function operating on an
:class:`OptimizerState` and as a scikit-learn style estimator whose
``fit(oracle, x0)`` runs the loop and stores the trace in ``trace_``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator

from .clipping import clip_hvp_with_flag, clip_with_flag
from .exceptions import ConfigurationError, ContractError
from .numerics import RandomSource, as_vector, euclidean_norm
from .problems import StochasticOracle
from .trace import RunTrace

G0_MODES = ("batch", "exact", "zero")


@dataclass(frozen=True)
class OptimizerState:
    x_prev: np.ndarray
    x_curr: np.ndarray
    g: np.ndarray
    t: int = 1
    samples_used: int = 0


@dataclass(frozen=True)
class StepReport:
    grad_norm_exact: float
    momentum_norm: float
    grad_clip_active: bool = False
    hvp_clip_active: bool = False
    q_t: float = math.nan


@dataclass(frozen=True)
class Streams:
    """Independent random streams for one run.

    ``q`` drives the interpolation draws, ``grad`` the gradient samples,
    ``hvp`` the Hessian-vector samples and ``init`` the initial batch.
    Every method draws from the same child index for the same purpose, so
    runs sharing a seed share their gradient noise.
    """

    q: RandomSource
    grad: RandomSource
    hvp: RandomSource
    init: RandomSource

    @classmethod
    def from_seed(cls, seed: int) -> "Streams":
        return cls(*RandomSource(seed, 0).split(4))


def _check_step_args(gamma: float, alpha: float | None = None) -> None:
    if not gamma > 0:
        raise ContractError(f"stepsize must be > 0, got {gamma}")
    if alpha is not None and not 0 < alpha <= 1:
        raise ContractError(f"momentum parameter must lie in (0, 1], got {alpha}")


def normalized_step(x: np.ndarray, g: np.ndarray, gamma: float) -> np.ndarray:
    """``x - gamma * g / ||g||``; a zero momentum leaves ``x`` in place."""
    ng = euclidean_norm(g)
    if ng == 0.0:
        return x.copy()
    return x - (gamma / ng) * g


def init_g0(oracle: StochasticOracle, x0, B_init: int, r: RandomSource, mode: str = "batch"):
    """Initial momentum and the number of samples it consumed.

    ``mode="batch"`` averages ``B_init`` stochastic gradients at ``x0``;
    ``"exact"`` uses the true gradient and ``"zero"`` the zero vector (both
    without oracle samples).
    """
    x0 = as_vector(x0, oracle.d, name="x0")
    if mode == "zero":
        return np.zeros(oracle.d), 0
    if mode == "exact":
        return oracle.exact_gradient(x0), 0
    if mode != "batch":
        raise ContractError(f"unknown g0 mode {mode!r}; expected one of {G0_MODES}")
    B_init = int(B_init)
    if B_init < 1:
        raise ContractError("B_init must be >= 1")
    acc = np.zeros(oracle.d)
    for _ in range(B_init):
        acc += oracle.noisy_gradient(x0, r)
    return acc / B_init, B_init


def _advance(state: OptimizerState, g: np.ndarray, gamma: float, samples: int) -> OptimizerState:
    x_next = normalized_step(state.x_curr, g, gamma)
    return OptimizerState(state.x_curr, x_next, g, state.t + 1, state.samples_used + samples)


def step_nsgd(state: OptimizerState, oracle, gamma: float, streams: Streams):
    _check_step_args(gamma)
    g = oracle.noisy_gradient(state.x_curr, streams.grad)
    report = StepReport(euclidean_norm(oracle.exact_gradient(state.x_curr)), euclidean_norm(g))
    return _advance(state, g, gamma, 1), report


def step_nsgdm(state: OptimizerState, oracle, gamma: float, alpha: float, streams: Streams):
    _check_step_args(gamma, alpha)
    grad = oracle.noisy_gradient(state.x_curr, streams.grad)
    g = (1.0 - alpha) * state.g + alpha * grad
    report = StepReport(euclidean_norm(oracle.exact_gradient(state.x_curr)), euclidean_norm(g))
    return _advance(state, g, gamma, 1), report


def step_clip_nsgdm(state: OptimizerState, oracle, gamma: float, alpha: float, lam: float, streams: Streams):
    _check_step_args(gamma, alpha)
    grad, clipped = clip_with_flag(oracle.noisy_gradient(state.x_curr, streams.grad), lam)
    g = (1.0 - alpha) * state.g + alpha * grad
    report = StepReport(
        euclidean_norm(oracle.exact_gradient(state.x_curr)),
        euclidean_norm(g),
        grad_clip_active=clipped,
    )
    return _advance(state, g, gamma, 1), report


def _hessian_correction_inputs(state: OptimizerState, oracle, streams: Streams):
    q = float(streams.q.generator.random())
    x_hat = q * state.x_curr + (1.0 - q) * state.x_prev
    dx = state.x_curr - state.x_prev
    grad = oracle.noisy_gradient(state.x_curr, streams.grad)
    hv = oracle.noisy_hvp(x_hat, dx, streams.hvp)
    return q, grad, hv


def step_nsgdhess(state: OptimizerState, oracle, gamma: float, alpha: float, streams: Streams):
    """One iteration of normalized SGD with Hessian-corrected momentum."""
    _check_step_args(gamma, alpha)
    q, grad, hv = _hessian_correction_inputs(state, oracle, streams)
    g = (1.0 - alpha) * (state.g + hv) + alpha * grad
    report = StepReport(
        euclidean_norm(oracle.exact_gradient(state.x_curr)),
        euclidean_norm(g),
        q_t=q,
    )
    return _advance(state, g, gamma, 2), report


def step_clip_nsgdhess(state: OptimizerState, oracle, gamma: float, alpha: float,
                       lam: float, lam_h_bar: float, streams: Streams):
    """One iteration of the clipped variant: both momentum inputs are clipped.

    The HVP threshold scales with the stepsize: ``gamma * lam_h_bar``.
    """
    _check_step_args(gamma, alpha)
    q, grad, hv = _hessian_correction_inputs(state, oracle, streams)
    hv, hvp_clipped = clip_hvp_with_flag(hv, gamma, lam_h_bar)
    grad, grad_clipped = clip_with_flag(grad, lam)
    g = (1.0 - alpha) * (state.g + hv) + alpha * grad
    report = StepReport(
        euclidean_norm(oracle.exact_gradient(state.x_curr)),
        euclidean_norm(g),
        grad_clip_active=grad_clipped,
        hvp_clip_active=hvp_clipped,
        q_t=q,
    )
    return _advance(state, g, gamma, 2), report


class BaseNormalizedOptimizer(BaseEstimator):
    """Shared fit loop. Subclasses define ``_initial_state`` and ``_step``.

    After ``fit``, the estimator exposes ``trace_`` (:class:`RunTrace`),
    ``x_`` (last iterate ``x_T``), ``n_iter_`` and ``samples_used_``.
    """

    method = "base"
    uses_hessian = False

    def _validate_params(self):
        if not self.gamma > 0:
            raise ContractError(f"gamma must be > 0, got {self.gamma}")
        if int(self.T) < 1:
            raise ContractError(f"T must be >= 1, got {self.T}")
        alpha = getattr(self, "alpha", None)
        if alpha is not None and not 0 < alpha <= 1:
            raise ContractError(f"alpha must lie in (0, 1], got {alpha}")

    def _initial_state(self, oracle, x0, streams) -> OptimizerState:
        g0 = np.zeros(oracle.d)
        return OptimizerState(x0, x0.copy(), g0, 1, 0)

    def _step(self, state, oracle, streams):
        raise NotImplementedError

    def _resolve_x0(self, oracle, x0):
        if x0 is None:
            return np.zeros(oracle.d)
        return as_vector(x0, oracle.d, name="x0").copy()

    def fit(self, oracle: StochasticOracle, x0=None):
        """Run ``T`` iterations from ``x0`` (origin if omitted)."""
        self._validate_params()
        x0 = self._resolve_x0(oracle, x0)
        T = int(self.T)
        seed = 0 if self.random_state is None else int(self.random_state)
        streams = Streams.from_seed(seed)
        state = self._initial_state(oracle, x0, streams)

        grad_norm = np.empty(T)
        mom = np.empty(T)
        gclip = np.zeros(T, dtype=bool)
        hclip = np.zeros(T, dtype=bool)
        qs = np.full(T, np.nan)
        samples = np.empty(T, dtype=np.int64)
        keep = bool(self.keep_iterates)
        iterates = [x0.copy()] if keep else None

        grad_norm[0] = euclidean_norm(oracle.exact_gradient(x0))
        mom[0] = euclidean_norm(state.g)
        samples[0] = state.samples_used
        stop = self.stop_below
        n = 1
        if stop is None or grad_norm[0] > stop:
            for t in range(1, T):
                if keep:
                    iterates.append(state.x_curr.copy())
                state, rep = self._step(state, oracle, streams)
                grad_norm[t] = rep.grad_norm_exact
                mom[t] = rep.momentum_norm
                gclip[t] = rep.grad_clip_active
                hclip[t] = rep.hvp_clip_active
                qs[t] = rep.q_t
                samples[t] = state.samples_used
                n = t + 1
                if stop is not None and rep.grad_norm_exact <= stop:
                    break

        header = {"method": self.method, "seed": seed, "T": T, **self.get_params()}
        header.pop("random_state", None)
        header.pop("keep_iterates", None)
        self.trace_ = RunTrace(
            header=header,
            t=np.arange(n),
            grad_norm=grad_norm[:n],
            momentum_norm=mom[:n],
            grad_clip=gclip[:n],
            hvp_clip=hclip[:n],
            q=qs[:n],
            samples_used=samples[:n],
            final_x=state.x_curr.copy(),
            iterates=np.array(iterates) if keep else None,
        )
        self.x_ = state.x_curr.copy()
        self.n_iter_ = n
        self.samples_used_ = int(state.samples_used)
        return self

    def score(self, oracle: StochasticOracle, x0=None) -> float:
        """Negative gradient norm at the fitted point (higher is better)."""
        return -euclidean_norm(oracle.exact_gradient(self.x_))


class NSGD(BaseNormalizedOptimizer):
    """Normalized SGD without momentum."""

    method = "nsgd"

    def __init__(self, gamma=0.01, T=1000, stop_below=None, random_state=None, keep_iterates=False):
        self.gamma = gamma
        self.T = T
        self.stop_below = stop_below
        self.random_state = random_state
        self.keep_iterates = keep_iterates

    def _step(self, state, oracle, streams):
        return step_nsgd(state, oracle, self.gamma, streams)


class NSGDM(BaseNormalizedOptimizer):
    """Normalized SGD with heavy-ball style momentum. Starts from ``g_0 = 0``."""

    method = "nsgdm"

    def __init__(self, gamma=0.01, alpha=0.1, T=1000, stop_below=None, random_state=None,
                 keep_iterates=False):
        self.gamma = gamma
        self.alpha = alpha
        self.T = T
        self.stop_below = stop_below
        self.random_state = random_state
        self.keep_iterates = keep_iterates

    def _step(self, state, oracle, streams):
        return step_nsgdm(state, oracle, self.gamma, self.alpha, streams)


class ClipNSGDM(BaseNormalizedOptimizer):
    """Normalized SGD with momentum over clipped stochastic gradients."""

    method = "clip_nsgdm"

    def __init__(self, gamma=0.01, alpha=0.1, lam=1.0, T=1000, stop_below=None,
                 random_state=None, keep_iterates=False):
        self.gamma = gamma
        self.alpha = alpha
        self.lam = lam
        self.T = T
        self.stop_below = stop_below
        self.random_state = random_state
        self.keep_iterates = keep_iterates

    def _step(self, state, oracle, streams):
        return step_clip_nsgdm(state, oracle, self.gamma, self.alpha, self.lam, streams)


class NSGDHess(BaseNormalizedOptimizer):
    """Normalized SGD with Hessian-corrected momentum.

    Parameters
    ----------
    gamma, alpha : float
        Stepsize and momentum parameter.
    T : int
        Number of iterates ``x_0 .. x_{T-1}`` to record.
    g0 : {"batch", "exact", "zero"}
        Initial momentum. ``"batch"`` averages ``B_init`` stochastic
        gradients. The first move is ``x_1 = x_0 - gamma * g0 / ||g0||``
        (no move when ``g0 = 0``).
    """

    method = "nsgdhess"
    uses_hessian = True

    def __init__(self, gamma=0.01, alpha=0.1, T=1000, g0="batch", B_init=1, stop_below=None,
                 random_state=None, keep_iterates=False):
        self.gamma = gamma
        self.alpha = alpha
        self.T = T
        self.g0 = g0
        self.B_init = B_init
        self.stop_below = stop_below
        self.random_state = random_state
        self.keep_iterates = keep_iterates

    def _initial_state(self, oracle, x0, streams):
        g0, used = init_g0(oracle, x0, self.B_init, streams.init, self.g0)
        x1 = normalized_step(x0, g0, self.gamma)
        return OptimizerState(x0, x1, g0, 1, used)

    def _step(self, state, oracle, streams):
        return step_nsgdhess(state, oracle, self.gamma, self.alpha, streams)


class ClipNSGDHess(BaseNormalizedOptimizer):
    """Normalized SGD with Hessian-corrected momentum, gradient and HVP clipping.

    Starts from ``x_1 = x_0`` and ``g_0 = 0``. ``lam_h_bar`` is the
    stepsize-free HVP threshold; the applied threshold is ``gamma * lam_h_bar``.
    """

    method = "clip_nsgdhess"
    uses_hessian = True

    def __init__(self, gamma=0.01, alpha=0.1, lam=1.0, lam_h_bar=1.0, T=1000, stop_below=None,
                 random_state=None, keep_iterates=False):
        self.gamma = gamma
        self.alpha = alpha
        self.lam = lam
        self.lam_h_bar = lam_h_bar
        self.T = T
        self.stop_below = stop_below
        self.random_state = random_state
        self.keep_iterates = keep_iterates

    def _validate_params(self):
        super()._validate_params()
        if not (self.lam > 0 and self.lam_h_bar > 0):
            raise ContractError("clip levels must be > 0")

    def _step(self, state, oracle, streams):
        return step_clip_nsgdhess(state, oracle, self.gamma, self.alpha, self.lam, self.lam_h_bar, streams)


OPTIMIZERS = {
    cls.method: cls for cls in (NSGD, NSGDM, ClipNSGDM, NSGDHess, ClipNSGDHess)
}


def make_optimizer(method: str, schedule=None, **overrides) -> BaseNormalizedOptimizer:
    """Build an estimator from a method name and a resolved schedule.

    Schedule fields the method does not take are ignored; a field the method
    needs but the schedule leaves unset raises :class:`ConfigurationError`.
    """
    try:
        cls = OPTIMIZERS[method]
    except KeyError:
        raise ConfigurationError(f"unknown optimizer {method!r}; choose from {sorted(OPTIMIZERS)}") from None
    params = {}
    accepted = cls._get_param_names()
    if schedule is not None:
        for name, value in schedule.as_params().items():
            if name in accepted and value is not None:
                params[name] = value
    params.update({k: v for k, v in overrides.items() if v is not None})
    unknown = set(params) - set(accepted)
    if unknown:
        raise ConfigurationError(f"{method} does not accept {sorted(unknown)}")
    required = {"gamma", "alpha", "lam", "lam_h_bar"} & set(accepted)
    missing = sorted(required - set(params))
    if missing:
        raise ConfigurationError(f"{method} needs {missing}, which the schedule does not set")
    return cls(**params)


def run(method: str, oracle: StochasticOracle, schedule, T: int, seed: int, x0=None,
        stop_below: float | None = None, keep_iterates: bool = False, **params) -> RunTrace:
    """Execute ``T`` iterations and return the trace; deterministic in ``seed``.

    Extra keyword arguments (for instance ``g0="zero"``) go to the estimator.
    """
    if int(T) < 1:
        raise ContractError("T must be >= 1")
    opt = make_optimizer(method, schedule, T=int(T), random_state=int(seed),
                         stop_below=stop_below, keep_iterates=keep_iterates, **params)
    opt.fit(oracle, x0)
    trace = opt.trace_
    if schedule is not None:
        trace.header["schedule"] = schedule.provenance
    return trace

