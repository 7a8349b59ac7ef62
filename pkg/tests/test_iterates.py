import math

import numpy as np
import pytest
from scipy import stats

from pyiterates import CustomIterate, log_moment_check, lyapunov_estimate, make_model
from pyiterates.errors import ExactSamplerUnavailable, ValidationError
from pyiterates.iterates import (
    ARLipschitzChain,
    DiscreteRenewalChain,
    IteratedFunctionSystem,
    MatrixWalk,
    StickyBetaChain,
    ar_f,
)
from pyiterates.models import ARLipschitzSpec, DiscreteRenewalSpec, IFSSpec, MatrixWalkSpec, StickyBetaSpec
from pyiterates.utils import make_stream, map_chunks


def test_make_model_families():
    assert isinstance(make_model(DiscreteRenewalSpec(p_seq=[1.0])), DiscreteRenewalChain)
    assert isinstance(make_model(StickyBetaSpec(a=3.0)), StickyBetaChain)
    assert isinstance(make_model(ARLipschitzSpec(tau=0.5)), ARLipschitzChain)
    assert isinstance(make_model(IFSSpec(rho=0.3)), IteratedFunctionSystem)
    assert isinstance(make_model(MatrixWalkSpec(matrices=[np.eye(2).tolist()])), MatrixWalk)


@pytest.mark.parametrize(
    "spec",
    [
        DiscreteRenewalSpec(p_seq=[0.5, 0.6]),
        DiscreteRenewalSpec(p=2.0),
        StickyBetaSpec(a=1.0),
        ARLipschitzSpec(tau=1.0),
        ARLipschitzSpec(tau=0.5, C=0.0),
        IFSSpec(rho=1.0),
        MatrixWalkSpec(matrices=[[[1.0, 2.0], [2.0, 4.0]]]),
    ],
)
def test_invalid_specs(spec):
    with pytest.raises(ValidationError):
        make_model(spec)


def test_renewal_transition(two_point_chain):
    states = np.array([0, 0, 3, 1])
    eps = np.array([1, 2, 1, 2])
    np.testing.assert_array_equal(two_point_chain.step(states, eps), [0, 1, 2, 0])


def test_renewal_stationary_frequencies(two_point_chain):
    states = two_point_chain.sample_stationary(make_stream(1, "test"), 60_000)
    freq = np.bincount(states, minlength=2) / states.size
    se = math.sqrt(2.0 / 9.0 / states.size)
    np.testing.assert_allclose(freq, [2.0 / 3.0, 1.0 / 3.0], atol=4 * se)


def test_renewal_observables(two_point_spec):
    chain = make_model(two_point_spec)
    np.testing.assert_allclose(chain.eval_observable(np.array([1, 2]), np.array([0, 1])), [1 / 3, -2 / 3])
    raw = make_model(DiscreteRenewalSpec(p_seq=[0.5, 0.5], observable="indicator_zero"))
    np.testing.assert_array_equal(raw.eval_observable(np.array([1, 2]), np.array([0, 1])), [1.0, 0.0])


def test_parametric_masses_sum_to_one():
    masses = DiscreteRenewalSpec(p=3.0, truncation=1000).masses()
    assert masses.size == 1001
    np.testing.assert_allclose(masses.sum(), 1.0, rtol=1e-12)
    assert np.all(np.diff(masses[:-1]) < 0)


def test_sticky_stationary_mean(sticky_chain):
    states = sticky_chain.sample_stationary(make_stream(2, "test"), 50_000)
    # nu(dx) = a x^{a-1} dx with a = 2: mean 2/3, variance 1/18
    np.testing.assert_allclose(states.mean(), 2.0 / 3.0, atol=4 * math.sqrt(1.0 / 18.0 / states.size))


def test_sticky_stationarity_is_preserved(sticky_chain):
    rng = make_stream(3, "test")
    states = sticky_chain.sample_stationary(rng, 50_000)
    for _ in range(5):
        states = sticky_chain.step(states, sticky_chain.sample_innovations(rng, states.size))
    np.testing.assert_allclose(states.mean(), 2.0 / 3.0, atol=4 * math.sqrt(1.0 / 18.0 / states.size))


def test_sticky_one_step_law(sticky_chain):
    rng = make_stream(5, "test")
    states = sticky_chain.sample_stationary(rng, 100_000)
    moved = sticky_chain.step(states, sticky_chain.sample_innovations(rng, states.size))
    result = stats.kstest(moved, lambda t: np.clip(t, 0.0, 1.0) ** 2)
    assert result.statistic < stats.kstwo.ppf(0.99, moved.size)


def test_custom_iterate_labels(custom_sticky):
    assert custom_sticky.family_tag == "sticky_custom"
    assert custom_sticky.observable == "centered_state"
    assert custom_sticky.has_exact_sampler
    assert str(custom_sticky) == "CustomIterate(sticky_custom, h=centered_state)"
    states = custom_sticky.sample_stationary(make_stream(6, "test"), 1000)
    reference = make_model(StickyBetaSpec(a=1.5)).sample_stationary(make_stream(6, "test"), 1000)
    np.testing.assert_array_equal(states, reference)


def test_custom_iterate_state_free():
    model = CustomIterate(
        sampler=lambda rng, size: rng.random(size),
        transition=lambda x, e: x,
        observable=lambda e, x: e,
        initial=lambda size: np.zeros(size),
        state_free=True,
    )
    assert model.observable == "innovation"
    assert model.family_tag == "custom"
    assert not model.has_exact_sampler
    with pytest.raises(ExactSamplerUnavailable):
        model.stationary_quantile(np.array([0.5]))


def test_ar_map_properties():
    t = np.linspace(-50.0, 50.0, 2001)
    value, derivative = ar_f(t, C=1.0, tau=0.5)
    np.testing.assert_allclose(value, -ar_f(-t, C=1.0, tau=0.5)[0], atol=1e-12)
    assert ar_f(0.0, C=1.0, tau=0.5)[0] == 0.0
    assert np.all((derivative >= 0.0) & (derivative <= 1.0))
    chain = make_model(ARLipschitzSpec(tau=0.5))
    assert chain.lipschitz_check(10_000, seed=4) <= 1.0 + 1e-12


def test_burn_in_model_has_no_exact_sampler():
    chain = make_model(ARLipschitzSpec(tau=0.5, burn_in=5))
    with pytest.raises(ExactSamplerUnavailable):
        chain.sample_stationary(make_stream(0, "test"), 10, mode="exact")
    assert chain.sample_stationary(make_stream(0, "test"), 10).shape == (10,)


def test_ifs_contraction_bound(interval_ifs):
    np.testing.assert_allclose(interval_ifs.contraction_bound([1, 2, 3]), [1.0, 0.5, 0.25])
    assert interval_ifs.one_step_contraction(200, inner=16, seed=5) <= 0.5 + 1e-12


def test_ifs_holder_modulus():
    ifs = make_model(IFSSpec(rho=0.5, observable="holder", alpha=0.5))
    np.testing.assert_allclose(ifs.modulus(0.25), 2.0**0.5 * 0.5)


def test_lyapunov_diagonal(diagonal_walk):
    estimate = lyapunov_estimate(diagonal_walk, n=200, reps=64, seed=6)
    np.testing.assert_allclose(estimate.value, math.log(2.0), atol=1e-10)
    assert estimate.aborted == 0


def test_lyapunov_rotations():
    angle = 0.7
    c, s = math.cos(angle), math.sin(angle)
    walk = make_model(
        MatrixWalkSpec(matrices=[[[c, -s], [s, c]], [[c, s], [-s, c]]], probabilities=[0.5, 0.5])
    )
    estimate = lyapunov_estimate(walk, n=100, reps=32, seed=7)
    np.testing.assert_allclose(estimate.value, 0.0, atol=1e-10)


def test_lyapunov_requires_matrix_walk(two_point_chain):
    with pytest.raises(ValidationError):
        lyapunov_estimate(two_point_chain, n=10, reps=4)


def test_log_norm_product_matches_cocycle_sum():
    walk = make_model(
        MatrixWalkSpec(matrices=[[[1.0, 1.0], [0.0, 1.0]], [[1.0, 0.0], [1.0, 1.0]]], probabilities=[0.5, 0.5])
    )
    rng = make_stream(8, "test")
    innovations = walk.sample_innovations(rng, 40)
    state = walk.initial_states(1)
    total = 0.0
    for g in innovations:
        total += float(walk.eval_observable(np.array([g]), state)[0])
        state = walk.step(state, np.array([g]))
    np.testing.assert_allclose(walk.log_norm_product(innovations), total, rtol=1e-10)


def test_log_moment_check_exact(diagonal_walk):
    value, se = log_moment_check(diagonal_walk, p=3.0)
    np.testing.assert_allclose(value, math.log(2.0) ** 3)
    assert se == 0.0


def test_map_chunks_ignores_thread_count():
    def draw(size, rng):
        return rng.random(size)

    single = np.concatenate(map_chunks(draw, 10_000, 9, "test", threads=1, chunk_size=1000))
    pooled = np.concatenate(map_chunks(draw, 10_000, 9, "test", threads=4, chunk_size=1000))
    np.testing.assert_array_equal(single, pooled)
