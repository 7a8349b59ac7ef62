import math

import numpy as np
import pytest

from pyiterates import BlockEstimator, BlockScheme, Coupling, QuantileCalculus
from pyiterates.errors import MissingTableError, ValidationError
from pyiterates.models import CONVERGENT, DIVERGENT, BlockParams, NuTable, QuantileTable


def test_eps_bound():
    assert BlockScheme.eps_bound(3.0, 2.0) == 0.5
    np.testing.assert_allclose(BlockScheme.eps_bound(5.0, 2.5), 0.2)


def test_closed_form_plan():
    plan = BlockScheme.plan_blocks_thm1(p=3.0, q=2.0, eps=0.1, k_lo=3, k_hi=8)
    np.testing.assert_array_equal(plan.k, np.arange(3, 9))
    M, m = plan.at(5)
    np.testing.assert_allclose(M, 3.0 ** (5.0 / 3.0))
    np.testing.assert_allclose(M, 6.2403, atol=1e-4)
    assert m == 27
    # k = 3: M = 3, m = [3^{1.8}] = 7
    assert plan.at(3) == (3.0, 7)


@pytest.mark.parametrize(
    "p, q, eps",
    [(2.0, 2.0, 0.1), (3.0, 1.0, 0.1), (3.0, 2.0, 0.5), (3.0, 2.0, 0.0)],
)
def test_closed_form_plan_ranges(p, q, eps):
    with pytest.raises(ValidationError):
        BlockScheme.plan_blocks_thm1(p=p, q=q, eps=eps)


def test_closed_form_plan_caps_windows():
    plan = BlockScheme.plan_blocks_thm1(p=3.0, q=2.0, eps=0.1, k_lo=10, k_hi=14)
    assert plan.m.max() == 10**4


def test_truncate():
    phi, g = BlockScheme.truncate([10.0, -10.0, 1.0], 6.2403)
    np.testing.assert_allclose(phi, [6.2403, -6.2403, 1.0])
    np.testing.assert_allclose(g, [3.7597, -3.7597, 0.0])
    with pytest.raises(ValidationError):
        BlockScheme.truncate([1.0], 0.0)


def test_quantile_driven_plan():
    uniform = QuantileTable.analytic("uniform")
    delta = Coupling.delta_envelope(0.5 ** np.arange(1, 30), mean_abs_x=0.5)
    gamma = QuantileCalculus().gamma_tables(delta, uniform)
    plan = BlockScheme.plan_blocks_thm2(3.0, uniform, gamma, k_lo=3, k_hi=8)
    assert plan.scheme == "thm2"
    assert plan.u1 == 0.5
    assert np.all(plan.m * plan.M <= 3.0 ** (plan.k / 3.0) * (1.0 + 1e-12))
    assert np.all(plan.M > 0)


def test_b1_bounded_observable():
    plan = BlockScheme.plan_blocks_thm1(p=3.0, q=2.0, eps=0.1)
    report = BlockScheme().eval_block_conditions("B1", 3.0, plan, quantile=QuantileTable.analytic("constant", c=1.0))
    assert report.verdict == CONVERGENT
    assert report.total == 0.0


def test_b1_heavy_tail_diverges():
    plan = BlockScheme.plan_blocks_thm1(p=3.0, q=2.0, eps=0.1)
    pareto = QuantileTable.analytic("pareto", alpha=2.0, scale=1.0)
    report = BlockScheme().eval_block_conditions("B1", 3.0, plan, quantile=pareto)
    # E(|X| - M)_+ = 1/M, so the terms grow like 3^{k/3}
    assert report.verdict == DIVERGENT
    np.testing.assert_allclose(report.slope, math.log(3.0) / 3.0, rtol=1e-8)


def test_b1_requires_quantile():
    plan = BlockScheme.plan_blocks_thm1(p=3.0, q=2.0, eps=0.1)
    with pytest.raises(MissingTableError):
        BlockScheme().eval_block_conditions("B1", 3.0, plan)


def test_b2_matching_variance():
    k = np.arange(3, 7)
    nu = NuTable(k, [1.01, 0.99, 1.0, 1.0], [0.01] * 4, [1.0] * 4, [0.01] * 4, [5, 7, 9, 12], [3.0] * 4, 1000, 64)
    plan = BlockParams(3.0, "thm1", k, [3.0] * 4, [5, 7, 9, 12])
    report = BlockScheme().eval_block_conditions("B2", 3.0, plan, nu=nu, sigma2=1.0, sigma2_se=0.0)
    assert report.verdict == CONVERGENT


def test_b2_growing_gap():
    k = np.arange(3, 9)
    gap = 3.0 ** k
    nu = NuTable(k, 1.0 + gap, [1e-3] * 6, 1.0 + gap, [1e-3] * 6, [5] * 6, [3.0] * 6, 1000, 64)
    plan = BlockParams(3.0, "thm1", k, [3.0] * 6, [5] * 6)
    report = BlockScheme().eval_block_conditions("B2", 3.0, plan, nu=nu, sigma2=1.0)
    assert report.verdict == DIVERGENT


def test_unknown_block_condition():
    plan = BlockScheme.plan_blocks_thm1(p=3.0, q=2.0, eps=0.1)
    with pytest.raises(ValidationError):
        BlockScheme().eval_block_conditions("B3", 3.0, plan)


def test_nu_k_independent_observable(iid_ifs):
    # X_j = (1 - rho) U_j with rho = 1/2: nu_k = Var(X_1) = 1/48 at every scale
    plan = BlockScheme.plan_blocks_thm1(p=3.0, q=2.0, eps=0.1, k_lo=3, k_hi=4)
    nu = BlockEstimator(iid_ifs).estimate_nu_k(plan, outer=3000, inner=32, seed=1)
    np.testing.assert_array_equal(nu.m, [7, 13])
    np.testing.assert_allclose(nu.nu, 1.0 / 48.0, atol=4 * nu.se.max())
    np.testing.assert_allclose(nu.nu_cov, 1.0 / 48.0, atol=4 * nu.se_cov.max())


def test_nu_k_renewal_chain(two_point_chain):
    # regeneration variance of the two-point renewal chain is 2/27
    plan = BlockScheme.plan_blocks_thm1(p=3.0, q=2.0, eps=0.1, k_lo=3, k_hi=4)
    nu = BlockEstimator(two_point_chain, threads=2).estimate_nu_k(plan, outer=10_000, inner=32, seed=4)
    np.testing.assert_array_equal(nu.m, [7, 13])
    np.testing.assert_allclose(nu.nu, 2.0 / 27.0, atol=4 * nu.se.max())
    np.testing.assert_allclose(nu.nu_cov, 2.0 / 27.0, atol=4 * nu.se_cov.max())


def test_nu_k_rejects_small_inner(iid_ifs):
    plan = BlockScheme.plan_blocks_thm1(p=3.0, q=2.0, eps=0.1, k_lo=3, k_hi=3)
    with pytest.raises(ValidationError):
        BlockEstimator(iid_ifs).estimate_nu_k(plan, outer=10, inner=8)


@pytest.mark.parametrize("q", [1, 2])
def test_tilde_distance_sticky(sticky_chain, q):
    plan = BlockScheme.plan_blocks_thm1(p=3.0, q=2.0, eps=0.1, k_lo=3, k_hi=3)
    check = BlockEstimator(sticky_chain).check_tilde_distance(3, plan, q=q, reps=4000, inner=32, seed=2)
    assert check.m == 7
    assert check.holds
    assert check.lhs >= 0.0


def test_tilde_distance_vanishes_without_state(iid_ifs):
    plan = BlockScheme.plan_blocks_thm1(p=3.0, q=2.0, eps=0.1, k_lo=3, k_hi=3)
    check = BlockEstimator(iid_ifs).check_tilde_distance(3, plan, q=1, reps=500, inner=8, seed=3)
    assert check.lhs == 0.0
    assert check.rhs == 0.0
    assert check.holds
