import math

import numpy as np
import pytest

from pyiterates import Coupling, QuantileCalculus, RenewalOracle, make_model
from pyiterates.errors import MissingTableError, ValidationError
from pyiterates.models import (
    CONVERGENT,
    DIVERGENT,
    INCONCLUSIVE,
    DeltaTable,
    DiscreteRenewalSpec,
    IFSSpec,
    QuantileTable,
)


@pytest.fixture
def calculus():
    return QuantileCalculus(terms=2000)


@pytest.fixture
def geometric_delta():
    # delta(n) = 2^{-n} with E|X_1| = delta(0) = 1/2 for the uniform law on [0, 1]
    values = 0.5 * 0.5 ** np.arange(0, 30)
    values[1] = values[0]
    return DeltaTable("L1", np.arange(30), values, envelope_applied=True, mean_abs_x=0.5)


def test_uniform_quantile_calculus():
    table = QuantileTable.analytic("uniform")
    np.testing.assert_allclose(table.q([0.0, 0.25, 1.0]), [1.0, 0.75, 0.0])
    np.testing.assert_allclose(table.h(0.5), 0.375)
    np.testing.assert_allclose(table.h_inv(0.375), 0.5)
    np.testing.assert_allclose(table.mean, 0.5)
    np.testing.assert_allclose(table.excess_mean(0.5), 0.125)


def test_analytic_power_integrals():
    exponential = QuantileTable.analytic("exponential", rate=2.0)
    # E|X|^3 = 3! / rate^3
    np.testing.assert_allclose(exponential.power_integral(3.0, 1.0), 6.0 / 8.0, rtol=1e-10)
    np.testing.assert_allclose(exponential.h_inv(exponential.h(0.3)), 0.3, rtol=1e-8)
    pareto = QuantileTable.analytic("pareto", alpha=3.0, scale=1.0)
    np.testing.assert_allclose(pareto.mean, 1.5)
    assert math.isinf(float(pareto.power_integral(3.0, 0.5)))


def test_empirical_quantile_matches_sample():
    samples = np.array([-3.0, 1.0, 2.0, -4.0] * 2500)
    table = QuantileCalculus.build_quantile(samples=samples)
    np.testing.assert_allclose(table.q([0.0, 0.3, 0.6, 0.9]), [4.0, 3.0, 2.0, 1.0])
    np.testing.assert_allclose(table.mean, 2.5)
    np.testing.assert_allclose(table.h_inv(table.h(0.4)), 0.4)


def test_small_sample_rejected():
    with pytest.raises(ValidationError):
        QuantileCalculus.build_quantile(samples=np.ones(100))


def test_h_inv_out_of_range():
    with pytest.raises(ValidationError):
        QuantileTable.analytic("uniform").h_inv(0.6)


def test_delta_inverse_counts_levels(calculus):
    delta = Coupling.delta_envelope([4.0, 2.0, 1.0], mean_abs_x=5.0)
    assert calculus.delta_inverse(1.5, delta) == 3
    assert calculus.delta_inverse(5.0, delta) == 0


def test_gamma_tables_constant_law(calculus):
    constant = QuantileTable.analytic("constant", c=1.0)
    delta = DeltaTable("L1", np.arange(5), [1.0, 1.0, 0.5, 0.25, 0.0], envelope_applied=True, mean_abs_x=1.0)
    tables = calculus.gamma_tables(delta, constant)
    # H(u) = u, so gamma(n) = delta(n)
    np.testing.assert_allclose(tables.gamma([0, 2, 3, 4, 10]), [1.0, 0.5, 0.25, 0.0, 0.0])
    np.testing.assert_allclose(tables.gamma_inv(0.3), 3.0)
    assert tables.warnings == []


def test_gamma_tables_mean_mismatch_warns(calculus, geometric_delta):
    tables = calculus.gamma_tables(geometric_delta, QuantileTable.analytic("uniform", b=3.0))
    assert tables.warnings


@pytest.mark.parametrize(
    "exponent, verdict",
    [(-2.0, CONVERGENT), (-0.5, DIVERGENT), (-1.0, INCONCLUSIVE)],
)
def test_verdict_rule(calculus, exponent, verdict):
    n = np.arange(1, 1001, dtype=float)
    slope, _, result, _ = calculus.verdict(n, n**exponent)
    assert result == verdict
    np.testing.assert_allclose(slope, exponent, rtol=1e-10)


def test_verdict_edge_cases(calculus):
    n = np.arange(1, 11, dtype=float)
    assert calculus.verdict(n, np.where(n < 5, 1.0, 0.0))[2:] == (CONVERGENT, "finite-support")
    assert calculus.verdict(n, np.where(n == 3, np.inf, 1.0))[2] == DIVERGENT


def test_c1_geometric_delta_converges(calculus, geometric_delta):
    report = calculus.eval_series_condition("C1", {"p": 3}, delta=geometric_delta, quantile=QuantileTable.analytic("uniform"))
    assert report.verdict == CONVERGENT
    assert report.total > 0
    assert np.all(np.diff(report.partial_sums) >= 0)


def test_c2_geometric_delta_converges(calculus, geometric_delta):
    uniform = QuantileTable.analytic("uniform")
    report = calculus.eval_series_condition("C2", {"p": 3}, delta=geometric_delta, quantile=uniform)
    assert report.verdict == CONVERGENT
    assert report.extra["integral_R_pow_Q"] > 0


def test_c1_requires_delta(calculus):
    with pytest.raises(MissingTableError, match="C1 requires a delta table"):
        calculus.eval_series_condition("C1", {"p": 3}, quantile=QuantileTable.analytic("uniform"))


def test_p_and_r_ranges(calculus, geometric_delta):
    with pytest.raises(ValidationError):
        calculus.eval_series_condition("C4", {"p": 2.0})
    with pytest.raises(ValidationError):
        calculus.eval_series_condition("C6", {"p": 3}, delta=geometric_delta)
    with pytest.raises(ValidationError):
        calculus.eval_series_condition("C6", {"p": 3, "r": 3}, delta=geometric_delta)
    with pytest.raises(ValidationError):
        calculus.eval_series_condition("C13", {"p": 3})


def test_c4_exact_meeting_tail(calculus, two_point_spec):
    survival = RenewalOracle(two_point_spec).pair_tail(n_max=60)
    report = calculus.eval_series_condition("C4", {"p": 3}, survival=survival)
    assert report.verdict == CONVERGENT


def test_c4_boundary_parametric_renewal(calculus):
    # p = 3 renewal: P(T* >= n) ~ n^{-2}, so n^{p-2} P(T* >= n) ~ n^{-1}
    survival = RenewalOracle(DiscreteRenewalSpec(p=3.0)).pair_tail(n_max=256)
    fit = Coupling.fit_tail_slope(survival, window=(64, 256))
    np.testing.assert_allclose(fit.slope, -2.0, atol=0.15)
    report = calculus.eval_series_condition("C4", {"p": 3}, survival=survival)
    assert report.verdict != CONVERGENT
    np.testing.assert_allclose(report.slope, -1.0, atol=0.15)


def test_c5_parametric_slope():
    calculus = QuantileCalculus(terms=10_000)
    spec = DiscreteRenewalSpec(p=5.0, truncation=100_000)
    report = calculus.eval_series_condition("C5", {"p": 3, "r": 13}, spec=spec)
    # n^{p(r-1)/(r-p)} n^{-(5+1)} = n^{3.6 - 6}
    np.testing.assert_allclose(report.slope, -2.4, rtol=1e-6)
    assert report.verdict == CONVERGENT


def test_c5_divergent_for_heavy_renewal():
    calculus = QuantileCalculus(terms=10_000)
    spec = DiscreteRenewalSpec(p=2.5, truncation=100_000)
    report = calculus.eval_series_condition("C5", {"p": 3, "r": 4}, spec=spec)
    # exponent 9 against n^{-3.5}
    assert report.verdict == DIVERGENT


def test_psi_moment_of_constant_renewal(calculus):
    assert calculus.psi_moment_tau(DiscreteRenewalSpec(p_seq=[1.0]), r=4.0, p=3.0) == pytest.approx(1.0)


def test_c7_ifs_modulus_converges():
    calculus = QuantileCalculus(terms=500)
    ifs = make_model(IFSSpec(rho=0.5))
    report = calculus.eval_series_condition("C7", {"p": 3, "r": 6}, model=ifs)
    assert report.verdict == CONVERGENT


def test_c7_logarithmic_modulus_diverges():
    calculus = QuantileCalculus(terms=500)
    report = calculus.eval_series_condition(
        "C7", {"p": 3, "r": 6}, modulus=lambda t: 1.0 / (1.0 + abs(math.log(t)))
    )
    assert report.verdict == DIVERGENT


def test_c10_power_decay(calculus):
    n = np.unique(np.geomspace(1, 1000, num=12).astype(int))
    table = DeltaTable("Linf", n, n.astype(float) ** -2.0)
    report = calculus.eval_series_condition("C10", {"p": 3}, delta_inf=table)
    assert report.verdict == CONVERGENT
    np.testing.assert_allclose(report.extra["q_hat"], 2.0, rtol=1e-8)
    assert report.extra["q_required"] == 1.0


def test_c11_compact_state_space(calculus, two_point_chain):
    report = calculus.eval_series_condition("C11", {"p": 3}, model=two_point_chain)
    assert report.verdict == CONVERGENT
    np.testing.assert_allclose(report.extra["sup"], 4.0 / 9.0)


def test_c12_interval_ifs(calculus):
    ifs = make_model(IFSSpec(rho=0.5))
    report = calculus.eval_series_condition("C12", {"p": 3}, quantile=QuantileTable.analytic("uniform"), model=ifs)
    assert report.verdict == CONVERGENT


def test_moment_flag_pareto():
    rng = np.random.default_rng(11)
    samples = rng.pareto(2.0, 200_000) + 1.0
    assert QuantileCalculus.moment_flag(samples, r=3.0).flagged
    assert not QuantileCalculus.moment_flag(samples, r=1.0).flagged
