"""Closed-form hyperparameters derived from problem constants.

``schedule_thm2``  in-expectation schedule for NSGDHess (batched ``g_0``).
``schedule_thm3``  high-probability schedule for ClipNSGDHess.
``schedule_clip_nsgdm_baseline``  the bare ``T``-power schedule for ClipNSGDM.
``schedule_thm3_shape``  ``alpha = gamma = T**(-p/(2p-1))``, the rate of the
high-probability schedule stripped of every constant.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass
from enum import Enum

from scipy.optimize import brentq

from .exceptions import ConfigurationError, ContractError

# Numerical constants of the explicit high-probability stepsize bound.
THM3_EXPLICIT_CONSTANTS = {"c1": 0.5, "c2": 1.0 / 12.0, "c3": 1.0 / 1408.0, "c4": 1.0 / 352.0, "c5": 1.0 / 968.0}
THM3_UNIT_CONSTANTS = {"c1": 1.0, "c2": 1.0, "c3": 1.0, "c4": 1.0, "c5": 1.0}


class Provenance(str, Enum):
    THM2 = "thm2"
    THM3 = "thm3"
    THM3_SHAPE = "thm3-shape"
    CLIP_NSGDM_BASELINE = "clip-nsgdm-baseline"
    MANUAL = "manual"


@dataclass(frozen=True)
class ProblemConstants:
    """Problem and target constants.

    ``delta`` is the initial gap ``F(x_0) - F_star``; ``delta_prob`` the
    failure probability of the high-probability guarantee.
    """

    delta: float = 1.0
    L: float = 1.0
    sigma: float = 1.0
    sigma_h: float = 0.0
    p: float = 2.0
    epsilon: float = 0.1
    T: int = 1000
    delta_prob: float = 0.1

    def __post_init__(self):
        if not 1 < self.p <= 2:
            raise ContractError(f"p must lie in (1, 2], got {self.p}")
        if self.delta < 0 or self.sigma < 0 or self.sigma_h < 0:
            raise ContractError("delta, sigma and sigma_h must be nonnegative")
        if not self.L > 0:
            raise ContractError("L must be positive")
        if not self.epsilon > 0:
            raise ContractError("epsilon must be positive")
        if int(self.T) < 1:
            raise ContractError("T must be >= 1")
        if not 0 < self.delta_prob <= 1:
            raise ContractError("delta_prob must lie in (0, 1]")

    @classmethod
    def from_problem(cls, oracle, x0, **kw) -> "ProblemConstants":
        """Take ``L`` from the oracle and ``delta = F(x0) - F_star`` unless overridden."""
        if oracle.L is None or oracle.F_star is None:
            raise ConfigurationError(f"{oracle.name} does not declare both L and F_star")
        kw.setdefault("delta", oracle.exact_value(x0) - oracle.F_star)
        kw.setdefault("L", oracle.L)
        return cls(**kw)


@dataclass(frozen=True)
class Schedule:
    gamma: float
    alpha: float
    B_init: int = 1
    lam: float | None = None
    lam_h_bar: float | None = None
    provenance: Provenance = Provenance.MANUAL

    def __post_init__(self):
        object.__setattr__(self, "provenance", Provenance(self.provenance))
        if not self.gamma > 0:
            raise ContractError(f"gamma must be positive, got {self.gamma}")
        if not 0 < self.alpha <= 1:
            raise ContractError(f"alpha must lie in (0, 1], got {self.alpha}")
        for name in ("lam", "lam_h_bar"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise ContractError(f"{name} must be positive when set")
        if self.provenance is Provenance.THM3 and (self.lam is None or self.lam_h_bar is None):
            raise ContractError("a thm3 schedule must set both clip levels")

    def with_clip(self, lam: float | None = None, lam_h_bar: float | None = None) -> "Schedule":
        d = asdict(self)
        if lam is not None:
            d["lam"] = lam
        if lam_h_bar is not None:
            d["lam_h_bar"] = lam_h_bar
        return Schedule(**d)

    def as_params(self) -> dict:
        return {"gamma": self.gamma, "alpha": self.alpha, "B_init": self.B_init,
                "lam": self.lam, "lam_h_bar": self.lam_h_bar}

    def echo(self) -> dict:
        d = self.as_params()
        d["provenance"] = self.provenance.value
        return d


def b_init_thm2(sigma: float, epsilon: float, p: float) -> int:
    r = sigma / epsilon
    # guard float noise such as 100.00000000000001 before rounding up
    raw = max(1.0, r ** (p / (p - 1.0)), r ** (p / (2.0 * p - 1.0)))
    return int(math.ceil(raw * (1.0 - 1e-12)))


def initial_error_bound(sigma: float, B_init: int, p: float) -> float:
    """``2 sigma / B_init**((p-1)/p)``: bound on the error of the averaged ``g_0``."""
    return 2.0 * sigma / B_init ** ((p - 1.0) / p)


def schedule_thm2(c: ProblemConstants) -> Schedule:
    """In-expectation NSGDHess schedule with a batched initial momentum."""
    p, T = c.p, int(c.T)
    if c.sigma == 0:
        warnings.warn("sigma = 0: noiseless problem, using alpha = 1", RuntimeWarning, stacklevel=2)
        alpha, B_init = 1.0, 1
    else:
        B_init = b_init_thm2(c.sigma, c.epsilon, p)
        E0 = initial_error_bound(c.sigma, B_init, p)
        expo = p / (2.0 * p - 1.0)
        alpha_eff = max((E0 / (T * c.sigma)) ** expo,
                        (c.delta * (c.L + c.sigma_h) / (T * c.sigma**2)) ** expo)
        alpha = min(1.0, alpha_eff)
    gamma = math.sqrt(c.delta * alpha ** (1.0 / p) / ((c.L + c.sigma_h) * T))
    if not gamma > 0:
        raise ConfigurationError("thm2 stepsize is zero; the initial gap delta must be positive")
    return Schedule(gamma=gamma, alpha=alpha, B_init=B_init, provenance=Provenance.THM2)


def thm3_log_term(T: int, delta_prob: float) -> float:
    return math.log(8.0 * T / delta_prob)


def thm3_stepsize_arms(c: ProblemConstants, alpha: float, constants: dict | None = None) -> list[float]:
    """The five upper bounds on the high-probability stepsize."""
    k = THM3_EXPLICIT_CONSTANTS if constants is None else constants
    T, p = int(c.T), c.p
    lg = thm3_log_term(T, c.delta_prob)
    root = math.sqrt(c.delta / c.L)
    arms = [
        k["c1"] * math.sqrt(c.delta / (c.L * T)),
        k["c2"] * alpha * root,
        k["c3"] * root / (alpha * T * lg),
        math.inf if c.sigma == 0 else k["c4"] * c.delta / (c.sigma * alpha ** ((p - 1.0) / p) * T * lg),
        math.sqrt(k["c5"] * c.delta * alpha ** (1.0 / p) / ((c.L + c.sigma_h) * T * lg)),
    ]
    return arms


def schedule_thm3(c: ProblemConstants, constants: str | dict = "explicit") -> Schedule:
    """High-probability ClipNSGDHess schedule.

    The stepsize is the minimum of the five bounds taken with equality.
    ``constants="explicit"`` uses the explicit numerical constants (1/2,
    1/12, 1/1408, 1/352, 1/968); ``"unit"`` sets them all to one, which is
    the order-of-magnitude form of the same bound.
    """
    T, p = int(c.T), c.p
    if thm3_log_term(T, c.delta_prob) < 1:
        raise ConfigurationError("log(8T/delta_prob) >= 1 is required by the high-probability schedule")
    if not c.delta > 0:
        raise ConfigurationError("the high-probability schedule needs a positive initial gap")
    if isinstance(constants, str):
        try:
            k = {"explicit": THM3_EXPLICIT_CONSTANTS, "unit": THM3_UNIT_CONSTANTS}[constants]
        except KeyError:
            raise ConfigurationError(f"unknown constants set {constants!r}") from None
    else:
        k = {**THM3_EXPLICIT_CONSTANTS, **constants}
    alpha = T ** (-p / (2.0 * p - 1.0))
    gamma = min(thm3_stepsize_arms(c, alpha, k))
    a_root = alpha ** (1.0 / p)
    lam = max(4.0 * math.sqrt(c.L * c.delta), c.sigma / a_root)
    lam_h_bar = 2.0 * (c.L + c.sigma_h) / a_root
    return Schedule(gamma=gamma, alpha=alpha, lam=lam, lam_h_bar=lam_h_bar, provenance=Provenance.THM3)


def schedule_thm3_shape(T: int, p: float, lam: float | None = None, lam_h_bar: float | None = None) -> Schedule:
    """``alpha = gamma = T**(-p/(2p-1))`` with externally chosen clip levels."""
    if int(T) < 1:
        raise ContractError("T must be >= 1")
    a = int(T) ** (-p / (2.0 * p - 1.0))
    return Schedule(gamma=a, alpha=a, lam=lam, lam_h_bar=lam_h_bar, provenance=Provenance.THM3_SHAPE)


def schedule_clip_nsgdm_baseline(c: ProblemConstants | None = None, *, T: int | None = None,
                                 p: float | None = None, lam: float | None = None) -> Schedule:
    """``gamma = T**(-(2p-1)/(3p-2))`` and ``alpha = T**(-p/(3p-2))``; ``lam`` supplied by the caller."""
    T = int(c.T if T is None else T)
    p = float(c.p if p is None else p)
    if T < 1:
        raise ContractError("T must be >= 1")
    gamma = T ** (-(2.0 * p - 1.0) / (3.0 * p - 2.0))
    alpha = T ** (-p / (3.0 * p - 2.0))
    return Schedule(gamma=gamma, alpha=alpha, lam=lam, provenance=Provenance.CLIP_NSGDM_BASELINE)


class Regime(str, Enum):
    LOWER_SECOND_ORDER = "lower-second-order"
    LOWER_FIRST_ORDER = "lower-first-order"
    LOWER_FIRST_ORDER_LH = "lower-first-order-lh"
    LOWER = "lower"
    UPPER_THM2 = "upper-thm2"


def predicted_sample_complexity(c: ProblemConstants, regime: str | Regime = Regime.UPPER_THM2,
                                L_h: float | None = None) -> float:
    """Leading-term sample complexity (no absolute constants).

    Lower-bound terms, each multiplied by ``(sigma/eps)**(1/(p-1))``:
    second-order ``delta sigma_h / eps**2``, first-order
    ``delta L sigma / eps**3`` and, when ``L_h`` is given,
    ``delta sqrt(L_h) sigma / eps**2.5``. ``"lower"`` takes their minimum.
    ``"upper-thm2"`` sums the three terms of the NSGDHess bound.
    """
    regime = Regime(regime)
    eps, s, p = c.epsilon, c.sigma, c.p
    tail = (s / eps) ** (1.0 / (p - 1.0))
    second = c.delta * c.sigma_h / eps**2 * tail
    first = c.delta * c.L * s / eps**3 * tail
    lip_h = math.inf if L_h is None else c.delta * math.sqrt(L_h) * s / eps**2.5 * tail
    if regime is Regime.LOWER_SECOND_ORDER:
        return second
    if regime is Regime.LOWER_FIRST_ORDER:
        return first
    if regime is Regime.LOWER_FIRST_ORDER_LH:
        return lip_h
    if regime is Regime.LOWER:
        return min(second, first, lip_h)
    base = c.delta * (c.L + c.sigma_h) / eps**2
    return base + base * tail + (s / eps) * tail


def epsilon_for_budget(c: ProblemConstants, regime: str | Regime = Regime.UPPER_THM2,
                          lo: float = 1e-12, hi: float = 1e12) -> float:
    """Invert the monotone complexity-in-epsilon map: the epsilon whose predicted
    complexity equals ``c.T``, found by bracketing root search in log space."""
    target = float(c.T)

    def f(log_eps):
        cc = ProblemConstants(**{**asdict(c), "epsilon": math.exp(log_eps)})
        return math.log(predicted_sample_complexity(cc, regime)) - math.log(target)

    a, b = math.log(lo), math.log(hi)
    if f(a) * f(b) > 0:
        raise ConfigurationError("target complexity is outside the searchable epsilon range")
    return math.exp(brentq(f, a, b, xtol=1e-14))
