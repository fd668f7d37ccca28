import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hessclip.exceptions import ConfigurationError, ContractError
from hessclip.problems import CubicProblem, QuadraticProblem
from hessclip.schedules import (
    ProblemConstants,
    Provenance,
    Regime,
    Schedule,
    b_init_thm2,
    epsilon_for_budget,
    initial_error_bound,
    predicted_sample_complexity,
    schedule_clip_nsgdm_baseline,
    schedule_thm2,
    schedule_thm3,
    schedule_thm3_shape,
    thm3_log_term,
    thm3_stepsize_arms,
)

constants = st.builds(
    ProblemConstants,
    delta=st.floats(1e-3, 1e3),
    L=st.floats(1e-2, 1e2),
    sigma=st.floats(1e-2, 1e2),
    sigma_h=st.floats(0, 1e2),
    p=st.floats(1.05, 2.0),
    epsilon=st.floats(1e-3, 1.0),
    T=st.integers(10, 10**6),
    delta_prob=st.floats(1e-4, 0.5),
)


def test_b_init_fixture():
    assert b_init_thm2(1.0, 0.1, 2.0) == 100
    assert initial_error_bound(1.0, 100, 2.0) == pytest.approx(0.2, rel=1e-15)


def test_thm2_fields():
    c = ProblemConstants(delta=1.0, L=1.0, sigma=1.0, sigma_h=0.0, p=2.0, epsilon=0.1, T=10**4)
    s = schedule_thm2(c)
    expo = 2.0 / 3.0
    alpha = max((0.2 / 1e4) ** expo, (1.0 / 1e4) ** expo)
    assert s.B_init == 100
    assert s.alpha == pytest.approx(alpha, rel=1e-14)
    assert s.gamma == pytest.approx(math.sqrt(alpha**0.5 / 1e4), rel=1e-14)
    assert s.lam is None and s.lam_h_bar is None and s.provenance is Provenance.THM2


def test_thm2_noiseless_warns():
    with pytest.warns(RuntimeWarning):
        s = schedule_thm2(ProblemConstants(sigma=0.0))
    assert s.alpha == 1.0


@given(constants)
def test_thm2_alpha_clamped(c):
    s = schedule_thm2(c)
    assert 0 < s.alpha <= 1 and s.gamma > 0 and s.B_init >= 1


def test_thm3_alpha_fixture():
    s = schedule_thm3(ProblemConstants(T=4000, p=2.0))
    assert abs(s.alpha - 4000 ** (-2.0 / 3.0)) <= 1e-12
    assert s.alpha == pytest.approx(3.969e-3, rel=1e-3)


def test_thm3_clip_levels():
    c = ProblemConstants(delta=0.5, L=1.0, sigma=1.0, sigma_h=0.5, p=2.0, T=4000)
    s = schedule_thm3(c)
    a_root = s.alpha**0.5
    assert s.lam == pytest.approx(1.0 / a_root)  # sigma arm dominates at small alpha
    assert s.lam_h_bar == pytest.approx(2 * 1.5 / a_root)


@given(constants)
def test_thm3_gamma_is_min_of_arms(c):
    s = schedule_thm3(c)
    arms = thm3_stepsize_arms(c, s.alpha)
    assert all(s.gamma <= a for a in arms)
    assert any(s.gamma == a for a in arms)


def test_thm3_monotone_in_T_and_delta():
    Ts = [2**k for k in range(4, 20)]
    g = [schedule_thm3(ProblemConstants(T=T)).gamma for T in Ts]
    assert all(a >= b for a, b in zip(g, g[1:]))
    dp = [0.5, 0.1, 1e-2, 1e-4, 1e-8]
    g = [schedule_thm3(ProblemConstants(delta_prob=d)).gamma for d in dp]
    assert all(a >= b for a, b in zip(g, g[1:]))


def test_thm3_clip_levels_grow_like_alpha_power():
    for p in (1.5, 2.0):
        lam = [schedule_thm3(ProblemConstants(p=p, T=2**k)).lam_h_bar for k in range(10, 20)]
        ratios = np.array(lam[1:]) / np.array(lam[:-1])
        np.testing.assert_allclose(ratios, 2 ** (1 / (2 * p - 1)), rtol=1e-12)


def test_thm3_exponent_slope():
    for p in (1.25, 1.5, 2.0):
        Ts = np.array([2**k for k in range(8, 20)])
        a = [schedule_thm3_shape(int(T), p).alpha for T in Ts]
        slope = np.polyfit(np.log(Ts), np.log(a), 1)[0]
        assert abs(slope + p / (2 * p - 1)) < 0.02


def test_thm3_log_hypothesis_and_bad_constants():
    # T >= 1 and delta_prob <= 1 already force log(8T/delta_prob) >= log 8
    assert thm3_log_term(1, 1.0) == pytest.approx(math.log(8))
    with pytest.raises(ConfigurationError):
        schedule_thm3(ProblemConstants(), constants="bogus")


def test_unit_constants_are_larger():
    c = ProblemConstants(T=4000)
    assert schedule_thm3(c, "unit").gamma > schedule_thm3(c, "explicit").gamma


def test_baseline_fixtures():
    s = schedule_clip_nsgdm_baseline(T=4000, p=2.0, lam=0.5)
    assert abs(s.gamma - 4000 ** (-0.75)) <= 1e-12
    assert abs(s.alpha - 4000 ** (-0.5)) <= 1e-12
    assert s.gamma == pytest.approx(1.988e-3, rel=1e-3)
    one = schedule_clip_nsgdm_baseline(T=1, p=1.5)
    assert one.gamma == one.alpha == 1.0
    assert schedule_clip_nsgdm_baseline(ProblemConstants(T=4000)).gamma == s.gamma


def test_complexity_fixtures():
    c = ProblemConstants(delta=1, L=1, sigma=1, sigma_h=1, p=2, epsilon=0.1)
    assert predicted_sample_complexity(c, Regime.LOWER_FIRST_ORDER) == pytest.approx(1e4)
    assert predicted_sample_complexity(c, Regime.LOWER_SECOND_ORDER) == pytest.approx(1e3)
    assert predicted_sample_complexity(c, "lower") == pytest.approx(1e3)


@given(constants)
def test_second_to_first_order_ratio(c):
    r = predicted_sample_complexity(c, "lower-second-order") / predicted_sample_complexity(c, "lower-first-order")
    assert r == pytest.approx(c.epsilon * c.sigma_h / (c.L * c.sigma), rel=1e-9)


def test_epsilon_for_budget_inverts():
    c = ProblemConstants(T=10**6)
    eps = epsilon_for_budget(c)
    back = predicted_sample_complexity(ProblemConstants(T=10**6, epsilon=eps))
    assert back == pytest.approx(1e6, rel=1e-9)


def test_from_problem():
    x0 = np.ones(4)
    c = ProblemConstants.from_problem(QuadraticProblem(4), x0, T=100)
    assert c.delta == 2.0 and c.L == 1.0
    with pytest.raises(ConfigurationError):
        ProblemConstants.from_problem(CubicProblem(4), x0)


@pytest.mark.parametrize("kw", [{"p": 1.0}, {"p": 2.5}, {"L": 0}, {"epsilon": 0}, {"T": 0},
                                {"delta_prob": 0}, {"sigma": -1}])
def test_constant_contracts(kw):
    with pytest.raises(ContractError):
        ProblemConstants(**kw)


def test_schedule_contracts_and_echo():
    with pytest.raises(ContractError):
        Schedule(gamma=0, alpha=0.5)
    with pytest.raises(ContractError):
        Schedule(gamma=0.1, alpha=0)
    with pytest.raises(ContractError):
        Schedule(gamma=0.1, alpha=0.5, provenance="thm3")
    s = Schedule(gamma=0.1, alpha=0.5).with_clip(lam=2.0, lam_h_bar=3.0)
    assert s.echo() == {"gamma": 0.1, "alpha": 0.5, "B_init": 1, "lam": 2.0, "lam_h_bar": 3.0,
                        "provenance": "manual"}
