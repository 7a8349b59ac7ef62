import numpy as np
import pytest

from pyiterates import RenewalOracle
from pyiterates.errors import TruncationError, ValidationError
from pyiterates.models import DiscreteRenewalSpec


@pytest.fixture
def oracle(two_point_spec):
    return RenewalOracle(two_point_spec)


def test_stationary_law(oracle):
    np.testing.assert_allclose(oracle.stationary(), [2.0 / 3.0, 1.0 / 3.0])
    assert oracle.mean_eps == 1.5


def test_pair_tail_two_point(oracle):
    # unequal starts have probability 4/9 and meet with probability 1/2 at every step
    table = oracle.pair_tail(n_max=8)
    expected = np.concatenate([[1.0], 4.0 / 9.0 * 0.5 ** np.arange(8)])
    np.testing.assert_allclose(table.survival, expected, atol=1e-14)
    np.testing.assert_allclose(table.survival[2], 2.0 / 9.0)
    assert table.source == "exact"


def test_pair_tail_degenerate():
    table = RenewalOracle(DiscreteRenewalSpec(p_seq=[1.0])).pair_tail(n_max=5)
    np.testing.assert_allclose(table.survival, [1.0, 0.0, 0.0, 0.0, 0.0, 0.0])


def test_pair_tail_is_non_increasing():
    masses = np.arange(1, 21, dtype=float)[::-1]
    oracle = RenewalOracle(DiscreteRenewalSpec(p_seq=(masses / masses.sum()).tolist()))
    survival = oracle.pair_tail(n_max=40).survival
    assert np.all(np.diff(survival) <= 1e-15)
    assert survival[40] >= 0.0


def test_pair_tail_state_cap_too_small():
    spec = DiscreteRenewalSpec(p_seq=[1.0 / 50.0] * 50)
    with pytest.raises(TruncationError):
        RenewalOracle(spec).pair_tail(n_max=5, state_cap=2)


def test_pair_tail_rejects_empty_grid(oracle):
    with pytest.raises(ValidationError):
        oracle.pair_tail(n_max=0)


def test_return_tail(oracle):
    tail = oracle.return_tail(n_max=4).survival
    np.testing.assert_allclose(tail, [1.0, 1.0, 1.0 / 3.0, 0.0, 0.0])


def test_regeneration_sigma2(oracle):
    np.testing.assert_allclose(oracle.regeneration_sigma2(), 2.0 / 27.0)


def test_innovation_sigma2_is_variance():
    oracle = RenewalOracle(DiscreteRenewalSpec(p_seq=[0.5, 0.5], observable="innovation"))
    np.testing.assert_allclose(oracle.regeneration_sigma2(), 0.25)


def test_beta_two_point(oracle):
    beta = oracle.beta(n_max=3)
    np.testing.assert_allclose(beta[0], 4.0 / 9.0)
    np.testing.assert_allclose(beta[1], 2.0 / 9.0)


def test_beta_degenerate():
    beta = RenewalOracle(DiscreteRenewalSpec(p_seq=[1.0])).beta(n_max=4)
    np.testing.assert_allclose(beta, 0.0, atol=1e-15)


def test_tv_coupling_bound(oracle):
    check = oracle.tv_coupling_bound_check(n_max=20)
    assert check.holds
    assert np.all(check.lhs <= check.rhs + 1e-10)


def test_tv_coupling_bound_longer_support():
    masses = np.array([0.1, 0.2, 0.3, 0.15, 0.25])
    check = RenewalOracle(DiscreteRenewalSpec(p_seq=masses.tolist())).tv_coupling_bound_check(n_max=30)
    assert check.holds
