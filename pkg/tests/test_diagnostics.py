import math

import numpy as np
import pytest

from pyiterates import Diagnostics, RenewalOracle, make_model
from pyiterates.diagnostics import EXPONENTIAL
from pyiterates.errors import InsufficientDataError, ValidationError
from pyiterates.models import DiscreteRenewalSpec, IFSSpec, StickyBetaSpec


def test_flat_top_weights():
    np.testing.assert_allclose(Diagnostics.flat_top_weights(4), [1.0, 1.0, 1.0, 0.5, 0.0])


def test_autocovariance_alternating():
    acov = Diagnostics.autocovariance(np.array([1.0, -1.0, 1.0, -1.0]), 2)
    np.testing.assert_allclose(acov[0], [1.0, -0.75, 0.5], atol=1e-12)


def test_decay_fit_exponential():
    n = np.arange(1, 21)
    fit = Diagnostics.decay_fit(0.7**n, n, EXPONENTIAL)
    np.testing.assert_allclose(fit.slope, math.log(0.7), rtol=1e-10)
    assert fit.points == 20


def test_decay_fit_power_window():
    n = np.arange(1, 101)
    fit = Diagnostics.decay_fit(3.0 * n**-1.5, n, window=(10, 50))
    np.testing.assert_allclose(fit.slope, -1.5, rtol=1e-10)
    np.testing.assert_allclose(math.exp(fit.intercept), 3.0, rtol=1e-10)
    assert fit.points == 41


def test_decay_fit_errors():
    with pytest.raises(InsufficientDataError):
        Diagnostics.decay_fit([1.0, 0.5, 0.25], [1, 2, 3])
    with pytest.raises(ValidationError):
        Diagnostics.decay_fit([1.0, 0.5, 0.0, 0.1], [1, 2, 3, 4])
    with pytest.raises(ValidationError):
        Diagnostics.decay_fit([1.0, 0.5, 0.2, 0.1], [1, 2, 3, 4], model="logistic")


def test_variance_growth_independent_terms(iid_ifs):
    growth = Diagnostics(iid_ifs).variance_growth([1, 10, 50], reps=6000, seed=1)
    # Var((1 - rho) U) = 1/48
    assert np.all(np.abs(growth.values - 1.0 / 48.0) <= 4 * growth.se)
    assert growth.sigma2_spectral is None


def test_variance_growth_matches_regeneration(two_point_chain, two_point_spec):
    growth = Diagnostics(two_point_chain, threads=2).variance_growth([200], reps=6000, seed=2)
    exact = RenewalOracle(two_point_spec).regeneration_sigma2()
    np.testing.assert_allclose(growth.sigma2_growth, exact, atol=4 * growth.sigma2_growth_se + 1e-3)


def test_variance_growth_rejects_bad_grid(iid_ifs):
    with pytest.raises(ValidationError):
        Diagnostics(iid_ifs).variance_growth([0, 10], reps=10)


def test_sigma2_spectral_linear_ar():
    # W' = W/2 + Z: sigma^2 = 1 / (1 - 1/2)^2 = 4
    model = make_model(IFSSpec(rho=0.5, map_family="affine", sigma=1.0, burn_in=200))
    value, se, window = Diagnostics(model).sigma2_spectral(path_length=20_000, chains=8, seed=3)
    assert window == 28
    np.testing.assert_allclose(value, 4.0, atol=0.6)
    assert se > 0


def test_sigma2_spectral_window_limit(iid_ifs):
    with pytest.raises(ValidationError):
        Diagnostics(iid_ifs).sigma2_spectral(path_length=100, lag_window=10)


def test_clt_degenerate_observable():
    model = make_model(DiscreteRenewalSpec(p_seq=[1.0]))
    report = Diagnostics(model).clt_check(n=10, reps=2000, seed=4)
    assert report.degenerate
    assert report.ks_statistic is None
    np.testing.assert_allclose(report.critical_1pct, 0.0363, atol=2e-4)


def test_clt_independent_terms(iid_ifs):
    report = Diagnostics(iid_ifs).clt_check(n=50, reps=2000, seed=5)
    assert not report.degenerate
    assert report.ks_statistic < report.critical_1pct
    np.testing.assert_allclose(report.mean, 0.25, atol=0.01)


def test_clt_with_declared_variance(two_point_chain, two_point_spec):
    sigma2 = RenewalOracle(two_point_spec).regeneration_sigma2()
    report = Diagnostics(two_point_chain).clt_check(n=2000, reps=1000, seed=6, sigma2=sigma2, mean=0.0)
    assert report.sigma2 == sigma2
    assert report.ks_statistic < report.critical_1pct


def test_variance_growth_custom_iterate(custom_sticky):
    builtin = make_model(StickyBetaSpec(a=1.5))
    custom = Diagnostics(custom_sticky).variance_growth([10, 50], reps=2000, seed=4)
    reference = Diagnostics(builtin).variance_growth([10, 50], reps=2000, seed=4)
    np.testing.assert_allclose(custom.values, reference.values)
    np.testing.assert_allclose(custom.se, reference.se)
