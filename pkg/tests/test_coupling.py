import math

import numpy as np
import pytest

from pyiterates import Coupling, RenewalOracle, make_model
from pyiterates.coupling import BURN_IN_FLAG
from pyiterates.errors import InsufficientDataError, ValidationError
from pyiterates.models import DeltaTable, DiscreteRenewalSpec, StickyBetaSpec, SurvivalTable


def test_fixed_pair_meeting_index():
    chain = make_model(DiscreteRenewalSpec(p_seq=[0.25, 0.25, 0.5]))
    path = Coupling(chain).simulate_coupled(5, init="fixed_pair", pair=(2, 5), innovations=np.array([1, 1, 3, 1, 1]))
    assert path.meeting_index == 3
    np.testing.assert_array_equal(path.states, [2, 1, 0, 2, 1, 0])
    np.testing.assert_array_equal(path.states_star, [5, 4, 3, 2, 1, 0])
    np.testing.assert_array_equal(path.observables[3:], path.observables_star[3:])


def test_identical_start_meets_at_zero(sticky_chain):
    path = Coupling(sticky_chain).simulate_coupled(20, init="identical", seed=1)
    assert path.meeting_index == 0
    np.testing.assert_array_equal(path.states, path.states_star)


def test_simulate_rejects_unknown_init(sticky_chain):
    with pytest.raises(ValidationError):
        Coupling(sticky_chain).simulate_coupled(5, init="antithetic")


def test_delta_envelope():
    delta = Coupling.delta_envelope([4.0, 2.0, 1.0], mean_abs_x=5.0)
    np.testing.assert_array_equal(delta.n, [0, 1, 2, 3, 4])
    np.testing.assert_allclose(delta.values, [5.0, 5.0, 2.0, 1.0, 0.5])
    assert delta.envelope_applied


def test_delta_envelope_is_running_sup():
    delta = Coupling.delta_envelope([1.0, 3.0, 0.5, 0.8], mean_abs_x=2.0)
    # (1/2) sup_{k >= n-1}: [1.5, 1.5, 0.4, 0.4], capped by delta(0)
    np.testing.assert_allclose(delta.values, [2.0, 2.0, 1.5, 1.5, 0.4, 0.4])
    assert np.all(np.diff(delta.values) <= 0)


def test_delta_envelope_requires_mean():
    with pytest.raises(ValidationError):
        Coupling.delta_envelope([1.0, 0.5])


def test_pairwise_l1_first_step(two_point_chain):
    table = Coupling(two_point_chain).estimate_pairwise_l1(k_max=6, n_paths=40_000, seed=2)
    # X_1 differs iff exactly one start sits at 0, which has probability 4/9
    np.testing.assert_allclose(table.values[0], 4.0 / 9.0, atol=4 * table.se[0])
    np.testing.assert_allclose(table.mean_abs_x, 4.0 / 9.0, atol=0.01)
    assert not table.envelope_applied
    assert np.all(np.diff(table.values) <= 4 * (table.se[1:] + table.se[:-1]))


def test_pairwise_l1_state_free(iid_ifs):
    table = Coupling(iid_ifs).estimate_pairwise_l1(k_max=4, n_paths=2000, seed=3)
    np.testing.assert_array_equal(table.values, 0.0)


def test_delta_inf_interval_ifs(interval_ifs):
    # shared innovations shrink every gap by rho; the widest design pair is (0, 1)
    table = Coupling(interval_ifs).estimate_delta_inf([1, 2, 4, 8], design_size=9, inner_reps=4, seed=4)
    np.testing.assert_allclose(table.values, 0.5 ** np.array([1, 2, 4, 8]), rtol=1e-9)
    assert np.all(table.values <= interval_ifs.contraction_bound(table.n) + 1e-12)
    assert table.flavor == "Linf"


def test_meeting_times_match_oracle(two_point_chain, two_point_spec):
    table = Coupling(two_point_chain, threads=2).sample_meeting_times(cap=10, n_paths=100_000, seed=5)
    exact = RenewalOracle(two_point_spec).pair_tail(n_max=10).survival
    band = 4 * np.sqrt(exact * (1.0 - exact) / table.n_paths) + 1e-12
    assert np.all(np.abs(table.survival - exact) <= band)
    assert table.survival[0] == 1.0
    assert np.all(np.diff(table.count) <= 0)


def test_meeting_times_are_reproducible(two_point_chain):
    first = Coupling(two_point_chain, threads=1).sample_meeting_times(cap=8, n_paths=10_000, seed=6)
    second = Coupling(two_point_chain, threads=3).sample_meeting_times(cap=8, n_paths=10_000, seed=6)
    np.testing.assert_array_equal(first.count, second.count)


def test_matrix_walk_has_no_meeting_time(diagonal_walk):
    with pytest.raises(ValidationError):
        Coupling(diagonal_walk).sample_meeting_times(cap=10, n_paths=10)
    assert Coupling(diagonal_walk).suggest_burn_in() == diagonal_walk.burn_in


def test_fit_tail_slope_exact_power_law():
    n = np.arange(0, 41)
    survival = np.concatenate([[1.0], np.arange(1, 41, dtype=float) ** -2.5])
    table = SurvivalTable(n, survival, source="exact")
    fit = Coupling.fit_tail_slope(table, window=(5, 40))
    np.testing.assert_allclose(fit.slope, -2.5, rtol=1e-10)
    assert fit.points == 36


def test_fit_tail_slope_needs_survivors():
    n = np.arange(0, 11)
    survival = np.concatenate([[1.0], 0.5 ** np.arange(1, 11)])
    count = np.round(survival * 200).astype(int)
    table = SurvivalTable(n, survival, count=count, n_paths=200)
    with pytest.raises(InsufficientDataError):
        Coupling.fit_tail_slope(table, window=(5, 10))


def test_suggest_burn_in_scales_pilot_quantile(sticky_chain):
    burn_in = Coupling(sticky_chain).suggest_burn_in(cap=2000, n_paths=2000, seed=7, factor=2.0)
    assert isinstance(burn_in, int)
    assert burn_in >= 2


def test_mean_abs_x_feeds_delta_table(two_point_chain):
    raw = Coupling(two_point_chain).estimate_pairwise_l1(k_max=3, n_paths=4000, seed=8)
    delta = Coupling.delta_envelope(raw)
    assert isinstance(delta, DeltaTable)
    assert delta.values[0] == raw.mean_abs_x
    assert math.isclose(delta.values[2], 0.5 * raw.values.max())


def test_sticky_meeting_tail_slope():
    # P(T* >= n) ~ n^{-a} for the sticky chain
    chain = make_model(StickyBetaSpec(a=1.5))
    table = Coupling(chain, threads=2).sample_meeting_times(cap=256, n_paths=200_000, seed=9)
    fit = Coupling.fit_tail_slope(table, window=(16, 256))
    assert -1.7 <= fit.slope <= -1.3


def test_burn_in_flag_recorded_once(interval_ifs):
    coupling = Coupling(interval_ifs, threads=4)
    coupling.estimate_pairwise_l1(k_max=3, n_paths=5 * 4096, seed=10)
    assert coupling.flags == [BURN_IN_FLAG]


def test_custom_iterate_meeting_times(custom_sticky):
    builtin = make_model(StickyBetaSpec(a=1.5))
    custom = Coupling(custom_sticky).sample_meeting_times(cap=20, n_paths=20_000, seed=3)
    reference = Coupling(builtin).sample_meeting_times(cap=20, n_paths=20_000, seed=3)
    np.testing.assert_array_equal(custom.count, reference.count)
    np.testing.assert_allclose(custom.survival, reference.survival)
