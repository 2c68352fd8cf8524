import math

import numpy as np
import pytest
from scipy import stats

from fission_dynamics import master_equation as me
from fission_dynamics.errors import SizeOverflow, StepTooLarge
from fission_dynamics.testing import fixtures


@pytest.mark.unit
def test_state_count_matches_enumeration():
    ss = me.enumerate_states(3, 4)
    assert len(ss.states) == me.state_count(3, 4) == 35
    assert ss.dimension == 36
    assert ss.label(ss.sink) == "sink"
    assert list(ss.sizes) == sorted(ss.sizes)


@pytest.mark.unit
def test_state_space_size_guard():
    with pytest.raises(SizeOverflow):
        me.enumerate_states(20, 20)


@pytest.mark.unit
def test_generator_columns_sum_to_zero(desk_space):
    Q = me.build_generator(desk_space, me.enumerate_states(3, 4))
    assert me.column_sum_defect(Q) < 1e-12
    # the sink is absorbing
    assert not Q.toarray()[:, -1].any()


@pytest.mark.unit
def test_generator_for_mismatched_sites(desk_space):
    with pytest.raises(ValueError):
        me.build_generator(desk_space, me.enumerate_states(2, 3))


@pytest.mark.integration
def test_probability_mass_is_conserved():
    space = fixtures.quiet_discrete_space(5)
    ss = me.enumerate_states(5, 6)
    Q = me.build_generator(space, ss)
    P = me.evolve(me.DistributionVector.point_mass(ss, (1, 1, 0, 0, 0)), Q, 1.0)
    assert abs(P.total - 1.0) < 1e-9
    assert 0.0 <= P.leak < 1e-6
    assert P.audit.violations == 0
    law = me.marginal_n(P)
    assert math.fsum(law.probabilities) + law.leak == pytest.approx(1.0, abs=1e-9)


@pytest.mark.integration
def test_rk4_agrees_with_matrix_exponential():
    space = fixtures.desk_discrete_space(2)
    ss = me.enumerate_states(2, 3)
    Q = me.build_generator(space, ss)
    P0 = me.DistributionVector.point_mass(ss, (1, 1))
    rk4 = me.evolve(P0, Q, 1.0, dt=me.auto_step(Q, 0.01))
    exact = me.expm_reference(Q, P0, 1.0)
    assert np.max(np.abs(rk4.probabilities - exact.probabilities)) < 1e-8


@pytest.mark.unit
def test_pure_death_law_is_binomial():
    space = me.ring_space(2, mortality=1.0, same_site=0.0, neighbour=0.0, fission_rate=0.0)
    ss = me.enumerate_states(2, 3)
    Q = me.build_generator(space, ss)
    P = me.evolve(me.DistributionVector.point_mass(ss, (2, 1)), Q, 0.7, dt=me.auto_step(Q, 0.01))
    expected = stats.binom.pmf(np.arange(4), 3, math.exp(-0.7))
    assert np.max(np.abs(me.marginal_n(P).probabilities - expected)) < 1e-8
    assert P.leak == 0.0


@pytest.mark.unit
def test_step_too_large_rejected(desk_space):
    ss = me.enumerate_states(3, 3)
    Q = me.build_generator(desk_space, ss)
    P0 = me.DistributionVector.point_mass(ss, (1, 0, 0))
    with pytest.raises(StepTooLarge):
        me.evolve(P0, Q, 1.0, dt=1.0 / me.max_exit_rate(Q))


@pytest.mark.unit
def test_dense_reference_refused_for_large_tables():
    space = fixtures.desk_discrete_space(4)
    ss = me.enumerate_states(4, 10)
    Q = me.build_generator(space, ss)
    with pytest.raises(SizeOverflow):
        me.expm_reference(Q, me.DistributionVector.point_mass(ss, (1, 0, 0, 0)), 0.1)


@pytest.mark.unit
def test_zero_time_is_identity(desk_space):
    ss = me.enumerate_states(3, 3)
    P0 = me.DistributionVector.point_mass(ss, (0, 2, 0))
    P = me.evolve(P0, me.build_generator(desk_space, ss), 0.0)
    assert np.array_equal(P.probabilities, P0.probabilities)


@pytest.mark.unit
def test_initial_state_must_fit(desk_space):
    ss = me.enumerate_states(3, 2)
    with pytest.raises(ValueError):
        me.DistributionVector.point_mass(ss, (2, 1, 0))


@pytest.mark.unit
def test_moments_of_point_mass():
    ss = me.enumerate_states(2, 3)
    P = me.DistributionVector.point_mass(ss, (1, 1))
    assert me.moments(P, 2) == [1.0, 3.0, 9.0]
    assert me.exp_moment(P, 0.5) == pytest.approx(math.e)


@pytest.mark.unit
def test_total_variation_and_empirical_law():
    assert me.total_variation([1.0, 0.0], [0.0, 1.0, 0.0]) == 1.0
    assert me.total_variation([0.5, 0.5], [0.5, 0.5]) == 0.0
    assert me.empirical_law([0, 1, 1, 3]).tolist() == [0.25, 0.5, 0.0, 0.25]


@pytest.mark.unit
def test_distribution_json_lists_nonzero_states():
    ss = me.enumerate_states(2, 2)
    payload = me.DistributionVector.point_mass(ss, (2, 0)).to_json()
    assert payload["states"] == {"0,0": 1.0}
    assert payload["sink"] == 0.0
    assert payload["total"] == 1.0


@pytest.mark.unit
def test_marginal_table_columns(desk_space):
    ss = me.enumerate_states(3, 2)
    table = me.marginal_table(me.DistributionVector.point_mass(ss, (0, 1, 0)))
    assert list(table.columns) == ["n", "probability"]
    assert table["probability"].tolist() == [0.0, 1.0, 0.0]


@pytest.mark.unit
def test_ring_space_row_masses():
    space = me.ring_space(4, mortality=1.0, same_site=0.2, neighbour=0.1, fission_rate=0.7, dispersal="nearest")
    assert np.allclose(space.b_mass, 0.7)
    assert space.a[0, 1] == 0.1 and space.a[0, 2] == 0.0
    with pytest.raises(ValueError):
        me.dispersal_matrix(3, "gaussian")


@pytest.mark.integration
def test_desk_rates_leak_more_than_quiet_rates():
    ss = me.enumerate_states(5, 6)
    start = me.DistributionVector.point_mass(ss, (1, 1, 0, 0, 0))
    desk = me.evolve(start, me.build_generator(fixtures.desk_discrete_space(5), ss), 1.0)
    quiet = me.evolve(start, me.build_generator(fixtures.quiet_discrete_space(5), ss), 1.0)
    assert desk.leak > 1e-6
    assert quiet.leak < desk.leak
