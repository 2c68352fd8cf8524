import math

import numpy as np
import pytest
from scipy import stats

from fission_dynamics import master_equation as me
from fission_dynamics.configuration import Configuration, TorusWindow
from fission_dynamics.errors import EmptyConfiguration, GuardTripped
from fission_dynamics.simulator import (
    InitialCondition,
    SimConfig,
    derive_seeds,
    next_event,
    replicate,
    replicate_discrete,
    run,
)
from fission_dynamics.testing import fixtures


def _config(params, side=10.0, end=1.0, seed=0, snapshots=(), initial=None, guard=1_000_000):
    return SimConfig(
        window=TorusWindow(side, params.dimension, params.interaction_radius),
        end_time=end,
        initial=initial or InitialCondition("poisson", 1.0),
        seed=seed,
        snapshot_times=snapshots,
        max_population=guard,
    )


@pytest.mark.unit
def test_derived_seeds_are_distinct_and_reproducible():
    seeds = derive_seeds(42, 100)
    assert len(set(seeds)) == 100
    assert seeds == derive_seeds(42, 100)
    assert seeds != derive_seeds(43, 100)


@pytest.mark.unit
def test_next_event_on_empty_configuration(desk_params, rng):
    gamma = Configuration(TorusWindow(12.0, 1, desk_params.interaction_radius), desk_params)
    with pytest.raises(EmptyConfiguration):
        next_event(gamma, desk_params, rng)


@pytest.mark.unit
def test_single_particle_pure_death_dies(rng):
    params = fixtures.pure_death_params(mortality=2.0)
    gamma = Configuration.from_points(TorusWindow(5.0, 1, params.interaction_radius), params, [[1.0]])
    record = next_event(gamma, params, rng)
    assert record.kind == "death"
    assert record.population == 0
    assert record.time > 0.0


@pytest.mark.unit
def test_fission_event_adds_one_particle(rng):
    params = fixtures.pure_fission_params(b_mass=1.0)
    gamma = Configuration.from_points(TorusWindow(5.0, 1, params.interaction_radius), params, [[2.5]])
    record = next_event(gamma, params, rng)
    assert record.kind == "fission"
    assert gamma.size == 2
    assert record.offspring is not None


@pytest.mark.unit
def test_zero_end_time_keeps_initial_configuration(desk_params):
    c = _config(desk_params, side=12.0, end=0.0, snapshots=(0.0,))
    t = run(c, desk_params)
    assert t.event_count == 0
    assert np.array_equal(t.snapshots[0][1], t.final)


@pytest.mark.unit
def test_snapshots_are_ordered_and_complete(desk_params):
    c = _config(desk_params, side=12.0, end=1.0, snapshots=(0.5, 0.0, 1.0), seed=3)
    t = run(c, desk_params)
    assert [s[0] for s in t.snapshots] == [0.0, 0.5, 1.0]


@pytest.mark.unit
def test_extinct_run_still_emits_snapshots():
    params = fixtures.pure_death_params(mortality=50.0)
    c = _config(params, side=5.0, end=2.0, snapshots=(1.0, 2.0), initial=InitialCondition("points", points=((1.0,),)))
    t = run(c, params)
    assert t.status == "extinct"
    assert [s[1].shape[0] for s in t.snapshots] == [0, 0]


@pytest.mark.unit
def test_guard_trip_keeps_partial_trajectory():
    params = fixtures.pure_fission_params(b_mass=5.0)
    c = _config(params, side=5.0, end=10.0, guard=20, initial=InitialCondition("points", points=((1.0,),)))
    with pytest.raises(GuardTripped) as exc:
        run(c, params)
    assert exc.value.trajectory.status == "guard"
    assert exc.value.trajectory.final.shape[0] > 20


@pytest.mark.integration
def test_same_seed_gives_identical_ensembles(desk_params):
    c = _config(desk_params, side=12.0, end=0.5, snapshots=(0.5,), seed=11)
    first = replicate(c, desk_params, 5)
    second = replicate(c, desk_params, 5)
    assert first.summary() == second.summary()
    for a, b in zip(first.trajectories, second.trajectories):
        assert np.array_equal(a.final, b.final)


@pytest.mark.integration
def test_worker_count_does_not_change_results(desk_params):
    c = _config(desk_params, side=12.0, end=0.3, snapshots=(0.3,), seed=5)
    serial = replicate(c, desk_params, 4, workers=1)
    parallel = replicate(c, desk_params, 4, workers=2)
    assert serial.summary() == parallel.summary()


@pytest.mark.integration
def test_merged_ensemble_summary_is_order_free(desk_params):
    c = _config(desk_params, side=12.0, end=0.2, snapshots=(0.2,), seed=1)
    a = replicate(c, desk_params, 3)
    b = replicate(_config(desk_params, side=12.0, end=0.2, snapshots=(0.2,), seed=2), desk_params, 3)
    assert a.merge(b).summary()["snapshots"] == b.merge(a).summary()["snapshots"]


@pytest.mark.integration
def test_pure_death_mean_decays_exponentially():
    # each particle survives to t with probability e^{-mt}
    params = fixtures.pure_death_params(mortality=1.0)
    c = _config(params, side=10.0, end=1.0, snapshots=(1.0,), seed=9, initial=InitialCondition("poisson", 2.0))
    ens = replicate(c, params, 400)
    counts = ens.populations(0)
    expected = 2.0 * 10.0 * math.exp(-1.0)
    se = math.sqrt(expected / counts.size)
    assert abs(counts.mean() - expected) < 3.0 * se


@pytest.mark.integration
def test_pure_fission_mean_grows_exponentially():
    params = fixtures.pure_fission_params(b_mass=1.0)
    start = InitialCondition("points", points=tuple((float(x),) for x in range(1, 9)))
    c = _config(params, side=10.0, end=0.5, snapshots=(0.5,), seed=4, initial=start)
    ens = replicate(c, params, 300)
    counts = ens.populations(0).astype(float)
    expected = 8.0 * math.exp(0.5)
    assert abs(counts.mean() - expected) < 3.0 * counts.std(ddof=1) / math.sqrt(counts.size)


@pytest.mark.slow
def test_discrete_simulator_law_matches_master_equation():
    space = fixtures.desk_discrete_space(3)
    ss = me.enumerate_states(3, 12)
    P = me.evolve(me.DistributionVector.point_mass(ss, (1, 1, 0)), me.build_generator(space, ss), 0.5)
    law = me.marginal_n(P)
    finals = replicate_discrete(space, (1, 1, 0), 0.5, 100_000, seed=1)
    assert me.total_variation(law.probabilities, me.empirical_law(finals.sum(axis=1))) < 0.02


@pytest.mark.unit
def test_discrete_run_pure_death_dies_out():
    space = me.ring_space(2, mortality=5.0, same_site=0.0, neighbour=0.0, fission_rate=0.0)
    finals = replicate_discrete(space, (2, 1), 20.0, 10, seed=3)
    assert finals.sum() == 0


@pytest.mark.integration
def test_holding_time_is_exponential_with_total_rate(desk_params, rng):
    window = TorusWindow(12.0, 1, desk_params.interaction_radius)
    points = [[0.0], [0.5], [3.0], [7.0], [7.4]]
    fresh = Configuration.from_points(window, desk_params, points)
    psi = fresh.total_rate
    p_death = (fresh.mortality_total + fresh.competition_total) / psi

    times, deaths = [], 0
    for _ in range(2000):
        record = next_event(Configuration.from_points(window, desk_params, points), desk_params, rng)
        times.append(record.time)
        deaths += record.kind == "death"

    assert stats.kstest(times, stats.expon(scale=1.0 / psi).cdf).pvalue > 0.01
    assert abs(deaths / 2000 - p_death) < 3.0 * math.sqrt(p_death * (1.0 - p_death) / 2000)


@pytest.mark.slow
def test_pure_fission_mean_at_unit_time_over_many_replicas():
    params = fixtures.pure_fission_params(b_mass=1.0)
    start = InitialCondition("points", points=tuple((float(x),) for x in range(10)))
    c = _config(params, side=10.0, end=1.0, snapshots=(1.0,), seed=17, initial=start, guard=10_000)
    counts = replicate(c, params, 10_000).populations(0).astype(float)
    expected = 10.0 * math.e
    assert abs(counts.mean() - expected) < 3.0 * counts.std(ddof=1) / math.sqrt(counts.size)
