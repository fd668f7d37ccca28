import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hessclip.exceptions import ConfigurationError, ContractError
from hessclip.noise import TailSpec
from hessclip.optimizers import (
    OPTIMIZERS,
    NSGD,
    NSGDM,
    ClipNSGDHess,
    NSGDHess,
    OptimizerState,
    Streams,
    _hessian_correction_inputs,
    init_g0,
    make_optimizer,
    normalized_step,
    run,
    step_nsgdhess,
)
from hessclip.problems import CountingOracle, CubicProblem, QuadraticProblem
from hessclip.schedules import Schedule

NOISY = dict(noise=TailSpec.pareto(1.5, 1.0), hessian_noise=TailSpec.pareto(1.5, 0.1))


def test_two_step_fixture():
    # hand trace on the noiseless quadratic: g_t equals grad F(x_t) = x_t
    p = QuadraticProblem(2)
    opt = NSGDHess(gamma=0.1, alpha=0.5, T=3, g0="exact", keep_iterates=True, random_state=0).fit(p, [1.0, 0.0])
    np.testing.assert_allclose(opt.trace_.iterates, [[1.0, 0.0], [0.9, 0.0], [0.8, 0.0]], atol=1e-15)
    np.testing.assert_allclose(opt.x_, [0.7, 0.0], atol=1e-15)
    np.testing.assert_allclose(opt.trace_.momentum_norm, [1.0, 0.9, 0.8], atol=1e-15)


def test_clip_variant_starts_in_place():
    p = QuadraticProblem(2)
    opt = ClipNSGDHess(gamma=0.1, alpha=0.5, lam=10, lam_h_bar=10, T=2, keep_iterates=True).fit(p, [1.0, 0.0])
    # x_1 = x_0, g_0 = 0, so the first correction vanishes and g_1 = alpha * grad
    np.testing.assert_array_equal(opt.trace_.iterates[1], [1.0, 0.0])
    assert opt.trace_.momentum_norm[1] == pytest.approx(0.5)
    np.testing.assert_allclose(opt.x_, [0.9, 0.0], atol=1e-15)


def test_zero_momentum_does_not_move():
    x = np.array([1.0, 2.0])
    assert np.array_equal(normalized_step(x, np.zeros(2), 0.3), x)


@given(st.integers(0, 2**32 - 1), st.floats(1e-4, 1.0))
@settings(max_examples=20)
def test_step_length_is_gamma(seed, gamma):
    p = QuadraticProblem(4, **NOISY)
    tr = run("nsgdhess", p, Schedule(gamma=gamma, alpha=0.3), 12, seed, x0=np.ones(4), keep_iterates=True)
    steps = np.linalg.norm(np.diff(np.vstack([tr.iterates, tr.final_x]), axis=0), axis=1)
    np.testing.assert_allclose(steps, gamma, rtol=1e-12, atol=1e-14)


@pytest.mark.parametrize("method,per_step,init", [
    ("nsgd", 1, 0), ("nsgdm", 1, 0), ("clip_nsgdm", 1, 0), ("nsgdhess", 2, 7), ("clip_nsgdhess", 2, 0),
])
def test_sample_accounting(method, per_step, init):
    c = CountingOracle(QuadraticProblem(3, **NOISY))
    params = {"B_init": 7} if method == "nsgdhess" else {}
    opt = make_optimizer(method, Schedule(gamma=0.01, alpha=0.2, lam=1.0, lam_h_bar=1.0), T=50,
                         random_state=3, **params).fit(c, np.ones(3))
    assert c.samples == opt.samples_used_ == init + per_step * 49
    assert opt.trace_.samples_used[-1] == opt.samples_used_
    if per_step == 2:
        assert c.hvp_calls == 49


def test_init_g0_modes():
    p = QuadraticProblem(2)
    from hessclip.numerics import RandomSource
    r = RandomSource(0)
    assert init_g0(p, [1, 2], 5, r, "batch")[1] == 5
    np.testing.assert_array_equal(init_g0(p, [1, 2], 5, r, "exact")[0], [1, 2])
    assert init_g0(p, [1, 2], 5, r, "zero") == (pytest.approx(np.zeros(2)), 0)
    with pytest.raises(ContractError):
        init_g0(p, [1, 2], 5, r, "bogus")
    with pytest.raises(ContractError):
        init_g0(p, [1, 2], 0, r, "batch")


def test_correction_exact_on_quadratic():
    p = QuadraticProblem(5)
    rng = np.random.default_rng(4)
    streams = Streams.from_seed(4)
    for _ in range(50):
        xp, xc = rng.standard_normal(5), rng.standard_normal(5)
        _, _, hv = _hessian_correction_inputs(OptimizerState(xp, xc, np.zeros(5)), p, streams)
        np.testing.assert_allclose(hv, p.exact_gradient(xc) - p.exact_gradient(xp), rtol=0, atol=1e-14)


def test_correction_unbiased_on_cubic():
    p = CubicProblem(3, c=2.0)
    xp, xc = np.array([0.5, -1.0, 2.0]), np.array([1.5, 0.0, 1.0])
    state = OptimizerState(xp, xc, np.zeros(3))
    streams = Streams.from_seed(9)
    hv = np.array([_hessian_correction_inputs(state, p, streams)[2] for _ in range(10**5)])
    truth = p.exact_gradient(xc) - p.exact_gradient(xp)
    se = hv.std(axis=0, ddof=1) / math.sqrt(hv.shape[0])
    assert np.all(np.abs(hv.mean(axis=0) - truth) <= 3 * se)
    # a fixed endpoint is biased, which is why the interpolation draw exists
    assert not np.allclose(p.exact_hvp(xc, xc - xp), truth)


def _pair(a, b, seed, x0, oracle, T=200):
    return a.set_params(random_state=seed, T=T).fit(oracle, x0).trace_, \
        b.set_params(random_state=seed, T=T).fit(oracle, x0).trace_


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_alpha_one_collapses_to_nsgd(seed):
    p = QuadraticProblem(4, **NOISY)
    x0 = np.linspace(-1, 1, 4)
    a, b = _pair(NSGDM(gamma=0.05, alpha=1.0), NSGD(gamma=0.05), seed, x0, p)
    assert a.equals(b)
    assert np.array_equal(a.final_x, b.final_x)
    h = NSGDHess(gamma=0.05, alpha=1.0, g0="zero", random_state=seed, T=200).fit(p, x0).trace_
    np.testing.assert_array_equal(h.grad_norm, b.grad_norm)
    np.testing.assert_array_equal(h.momentum_norm, b.momentum_norm)
    assert np.array_equal(h.final_x, b.final_x)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_infinite_clip_collapses_to_nsgdhess(seed):
    p = QuadraticProblem(4, **NOISY)
    x0 = np.linspace(-1, 1, 4)
    a, b = _pair(ClipNSGDHess(gamma=0.05, alpha=0.3, lam=math.inf, lam_h_bar=math.inf),
                 NSGDHess(gamma=0.05, alpha=0.3, g0="zero"), seed, x0, p)
    assert a.equals(b)
    assert np.array_equal(a.final_x, b.final_x)
    assert not a.grad_clip.any() and not a.hvp_clip.any()


def test_determinism_and_seed_sensitivity():
    p = QuadraticProblem(4, **NOISY)
    sch = Schedule(gamma=0.05, alpha=0.2, lam=1.0, lam_h_bar=1.0)
    for m in OPTIMIZERS:
        a, b = run(m, p, sch, 100, 5, x0=np.ones(4)), run(m, p, sch, 100, 5, x0=np.ones(4))
        c = run(m, p, sch, 100, 6, x0=np.ones(4))
        assert a.equals(b)
        assert not a.equals(c)


def test_stop_below_truncates():
    p = QuadraticProblem(3)
    tr = run("nsgd", p, Schedule(gamma=0.1, alpha=1.0), 1000, 0, x0=np.ones(3), stop_below=0.5)
    assert tr.grad_norm[-1] <= 0.5 < tr.grad_norm[-2]


def test_momentum_bound_on_heavy_tails():
    p = QuadraticProblem(5, noise=TailSpec.pareto(1.1, 1.0), hessian_noise=TailSpec.pareto(1.1, 1.0))
    g, a, lam, lh = 0.02, 0.1, 0.7, 3.0
    for seed in range(5):
        tr = run("clip_nsgdhess", p, Schedule(gamma=g, alpha=a, lam=lam, lam_h_bar=lh), 2000, seed, x0=np.ones(5))
        assert tr.momentum_norm.max() <= (lam + (1 - a) * g * lh / a) * (1 + 1e-12)


def test_parameter_contracts():
    p = QuadraticProblem(2)
    with pytest.raises(ContractError):
        NSGDM(gamma=0.0).fit(p)
    with pytest.raises(ContractError):
        NSGDM(alpha=1.5).fit(p)
    with pytest.raises(ContractError):
        ClipNSGDHess(lam=-1).fit(p)
    with pytest.raises(ContractError):
        NSGD(T=0).fit(p)
    with pytest.raises(ConfigurationError):
        make_optimizer("adam")
    with pytest.raises(ConfigurationError):
        make_optimizer("clip_nsgdm", Schedule(gamma=0.1, alpha=0.1))
    with pytest.raises(ContractError):
        step_nsgdhess(OptimizerState(np.zeros(2), np.zeros(2), np.zeros(2)), p, 0.1, 0.0, Streams.from_seed(0))


def test_sklearn_params_roundtrip():
    from sklearn.base import clone
    opt = ClipNSGDHess(gamma=0.2, lam=3.0)
    c = clone(opt)
    assert c.get_params() == opt.get_params()
    assert opt.fit(QuadraticProblem(2), np.ones(2)).score(QuadraticProblem(2)) <= 0
