import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hessclip.exceptions import ContractError
from hessclip.noise import (
    NoiseKind,
    TailSpec,
    estimate_moment,
    median_of_means,
    sample_noise_matrix,
    sample_noise_vector,
    sample_two_sided_pareto,
)
from hessclip.numerics import RandomSource, operator_norm, power_iteration_norm


def test_tailspec_contracts():
    with pytest.raises(ContractError):
        TailSpec.pareto(1.0)
    with pytest.raises(ContractError):
        TailSpec.pareto(1.5, scale=0.0)
    with pytest.raises(ContractError):
        TailSpec.pareto(1.5, scale=math.inf)
    assert TailSpec.none().is_none


def test_sampler_requires_pareto():
    with pytest.raises(ContractError):
        sample_two_sided_pareto(TailSpec.gaussian(), RandomSource(0))


def test_sampler_matches_inverse_cdf_by_hand():
    # same two uniform streams consumed by hand: u for the magnitude, then the sign
    g = np.random.Generator(np.random.PCG64(np.random.SeedSequence(3, spawn_key=(0,))))
    u, s = 1.0 - g.random(5), g.random(5)
    expected = np.where(s < 0.5, -1.0, 1.0) * 2.0 * u ** (-1.0 / 1.7)
    got = sample_two_sided_pareto(TailSpec.pareto(1.7, 2.0), RandomSource(3), 5)
    np.testing.assert_array_equal(got, expected)


def test_support_and_symmetry():
    x = sample_two_sided_pareto(TailSpec.pareto(1.5, 1.0), RandomSource(1), 10**6)
    assert np.all(np.abs(x) >= 1.0)
    center, se = median_of_means(x, n_blocks=50)
    assert abs(center) < 0.05
    # odd moments of a bounded transform vanish under symmetry
    assert abs(np.mean(np.tanh(x))) < 5 * np.std(np.tanh(x)) / 1e3


def test_abs_mean_closed_form_pbar_2():
    x = sample_two_sided_pareto(TailSpec.pareto(2.0, 1.0), RandomSource(2), 10**6)
    assert abs(estimate_moment(x, 1).value - 2.0) < 0.02


@pytest.mark.parametrize("pbar, q", [(1.5, 1.2), (2.5, 2.0), (1.8, 1.0)])
def test_closed_form_moment(pbar, q):
    spec = TailSpec.pareto(pbar, 0.7)
    assert spec.pareto_abs_moment(q) == pytest.approx(0.7**q * pbar / (pbar - q))
    assert spec.pareto_abs_moment(pbar) == math.inf


def test_moment_converges_below_tail_index():
    spec = TailSpec.pareto(2.0, 1.0)
    x = sample_two_sided_pareto(spec, RandomSource(4), 2 * 10**5)
    a, b = estimate_moment(x[: 10**5], 1.5), estimate_moment(x, 1.5)
    assert abs(a.value - b.value) < 3 * math.hypot(a.std_error, b.std_error)
    assert abs(b.value - spec.pareto_abs_moment(1.5)) < 4 * b.std_error


@pytest.mark.parametrize("q", [1.5, 2.0])
def test_moment_diverges_at_and_above_tail_index(q):
    # median over independent replicates per sample-size decade; grows like log n at q = pbar
    spec = TailSpec.pareto(1.5, 1.0)
    reps = RandomSource(5).split(60)
    med = [np.median([estimate_moment(sample_two_sided_pareto(spec, r, 10**k), q).value for r in reps])
           for k in range(2, 7, 2)]
    assert all(b > a for a, b in zip(med, med[1:]))


def test_noise_vector_none_and_fixture():
    np.testing.assert_array_equal(sample_noise_vector(TailSpec.none(), 4, RandomSource(0)), np.zeros(4))
    # frozen from a direct numpy evaluation of the inverse-CDF recipe
    expected = np.array([2.90333619, 1.03703971, -1.81593287, 3.87346469, 2.38992126,
                         1.13150232, 1.06356234, 2.39990137, 1.04264585, -1.27980428])
    got = sample_noise_vector(TailSpec.pareto(1.5), 10, RandomSource(7))
    np.testing.assert_allclose(got, expected, rtol=0, atol=5e-9)


def test_radial_noise_norm_is_pareto():
    spec = TailSpec.pareto(2.0, 1.0, per_coordinate=False)
    norms = [np.linalg.norm(sample_noise_vector(spec, 5, r)) for r in RandomSource(8).split(4000)]
    assert min(norms) >= 1.0 - 1e-12
    assert abs(np.mean(norms) - 2.0) < 0.15


def test_vector_p_moment_stable():
    spec = TailSpec.pareto(1.6, 1.0)
    r = RandomSource(9)
    norms = np.array([np.linalg.norm(sample_noise_vector(spec, 10, r)) for _ in range(10**5)])
    a, b = estimate_moment(norms[: 5 * 10**4], 1.5), estimate_moment(norms, 1.5)
    assert np.isfinite(b.value)
    assert abs(a.value - b.value) < 3 * math.hypot(a.std_error, b.std_error)
    # sigma_bound dominates the empirical moment
    assert b.value ** (1 / 1.5) <= spec.sigma_bound(10, 1.5)


def test_noise_matrix():
    assert not sample_noise_matrix(TailSpec.none(), 3, RandomSource(0)).any()
    E = sample_noise_matrix(TailSpec.pareto(2.5), 10, RandomSource(1))
    assert np.array_equal(E, E.T)


def test_matrix_operator_norm_moment_finite():
    spec = TailSpec.pareto(2.0, 1.0)
    r = RandomSource(10)
    ops = np.array([power_iteration_norm(sample_noise_matrix(spec, 10, r), iters=60) for _ in range(10**4)])
    m = estimate_moment(ops, 1.9)
    assert np.isfinite(m.value) and m.std_error < m.value
    E = sample_noise_matrix(spec, 10, r)
    assert power_iteration_norm(E, iters=3000) == pytest.approx(operator_norm(E), rel=1e-6)


def test_estimate_moment_examples():
    assert estimate_moment([2, 2, 2], 2).value == 4
    assert estimate_moment([-1, 1], 1).value == 1
    with pytest.raises(ContractError):
        estimate_moment([], 1)


@given(st.floats(1.05, 3.0), st.integers(0, 2**32))
def test_determinism(pbar, seed):
    spec = TailSpec.pareto(pbar)
    a = sample_noise_vector(spec, 6, RandomSource(seed))
    b = sample_noise_vector(spec, 6, RandomSource(seed))
    assert np.array_equal(a, b)


def test_gaussian_sigma_bound():
    spec = TailSpec.gaussian(2.0)
    assert spec.sigma_bound(4, 2.0) == 4.0
    assert spec.kind is NoiseKind.GAUSSIAN
