import math

import numpy as np
import pytest

from fission_dynamics.analytics import domination_certificate, envelope_plan, schedule
from fission_dynamics.configuration import Snapshot, TorusWindow
from fission_dynamics.errors import EmptyWindow, NoPairs
from fission_dynamics.estimators import (
    Box,
    ThetaFunction,
    bogoliubov_functional,
    count_stats,
    factorial_moments,
    intensity,
    pair_correlation,
    pair_stats,
    poisson_count_test,
    theta_stats,
)
from fission_dynamics.kernels import FissionKernel, ModelParams, MortalityField, RadialKernel
from fission_dynamics.simulator import InitialCondition, SimConfig, replicate
from fission_dynamics.testing import fixtures


def _poisson_snapshot(rng, kappa=2.0, side=10.0, d=1, replicas=2000):
    window = TorusWindow(side, d)
    configs = tuple(
        rng.random((int(rng.poisson(kappa * side**d)), d)) * side for _ in range(replicas)
    )
    return Snapshot(0.0, window, configs)


@pytest.mark.unit
def test_box_outside_window_rejected():
    window = TorusWindow(10.0, 1)
    with pytest.raises(EmptyWindow):
        Box((5.0,), (11.0,)).check(window)
    with pytest.raises(EmptyWindow):
        Box((3.0,), (3.0,)).check(window)


@pytest.mark.unit
def test_intensity_on_hand_built_snapshot():
    window = TorusWindow(4.0, 1)
    snap = Snapshot(0.0, window, (np.array([[0.5], [1.5], [3.0]]), np.array([[2.0]])))
    est = intensity(snap, Box((0.0,), (2.0,)))
    # counts 2 and 0 on a box of length 2
    assert est.value == pytest.approx(0.5)
    assert est.replicas == 2


@pytest.mark.integration
def test_poisson_intensity_recovers_kappa(rng):
    snap = _poisson_snapshot(rng)
    est = intensity(snap)
    assert abs(est.value - 2.0) < 4.0 * est.stderr


@pytest.mark.integration
def test_poisson_factorial_moments_match_reference(rng):
    snap = _poisson_snapshot(rng)
    report = factorial_moments(snap, Box((0.0,), (5.0,)), 3, envelope_kappa=2.0)
    for m, mean, se in zip(report.orders, report.moments, report.stderr):
        assert abs(mean - 10.0**m) < 4.0 * se
    assert report.violations == ()


@pytest.mark.unit
def test_factorial_moments_without_envelope_check_nothing(rng):
    snap = _poisson_snapshot(rng, kappa=50.0, side=10.0, replicas=200)
    report = factorial_moments(snap, None, 3)
    assert report.envelope_kappa is None
    assert report.envelope == ()
    assert report.violations == ()
    assert report.poisson_reference[0] == pytest.approx(report.moments[0])

    low = factorial_moments(snap, None, 3, envelope_kappa=40.0)
    assert low.envelope == pytest.approx((400.0, 400.0**2, 400.0**3))
    assert low.violations == (1, 2, 3)


@pytest.mark.unit
def test_factorial_moment_violation_flagged():
    window = TorusWindow(10.0, 1)
    clumped = np.full((6, 1), 2.0)
    snap = Snapshot(0.0, window, (clumped,) * 30 + (np.empty((0, 1)),) * 30)
    report = factorial_moments(snap, None, 2, envelope_kappa=0.05)
    assert 2 in report.violations


@pytest.mark.integration
def test_poisson_pair_correlation_is_flat(rng):
    snap = _poisson_snapshot(rng, replicas=500)
    est = pair_correlation(snap, np.linspace(0.0, 2.0, 5))
    assert np.all(np.abs(est.k2 - 4.0) < 4.0 * est.stderr + 1e-9)


@pytest.mark.unit
def test_pair_correlation_without_pairs():
    window = TorusWindow(10.0, 1)
    snap = Snapshot(0.0, window, (np.array([[1.0]]), np.empty((0, 1))))
    with pytest.raises(NoPairs):
        pair_correlation(snap, [0.0, 1.0, 2.0])


@pytest.mark.unit
def test_pair_bins_beyond_half_side_rejected(rng):
    snap = _poisson_snapshot(rng, replicas=2)
    with pytest.raises(ValueError):
        pair_correlation(snap, [0.0, 6.0])


@pytest.mark.unit
def test_minus_sampling_box_too_small(rng):
    snap = _poisson_snapshot(rng, replicas=2)
    with pytest.raises(EmptyWindow):
        pair_stats(snap, [0.0, 1.0, 2.0], Box((1.0,), (4.0,)))


@pytest.mark.unit
def test_zero_theta_functional_is_exactly_one(rng):
    snap = _poisson_snapshot(rng, replicas=50)
    theta = ThetaFunction("constant", 0.0, (0.0,), (5.0,))
    est = bogoliubov_functional(snap, theta)
    assert est.value == 1.0
    assert est.stderr == 0.0
    assert est.truncated == 1.0


@pytest.mark.integration
def test_poisson_functional_is_exponential(rng):
    # E Π(1+θ) = exp(κ ∫θ) for a Poisson process
    snap = _poisson_snapshot(rng)
    theta = ThetaFunction("constant", -0.5, (2.0,), (3.0,))
    est = bogoliubov_functional(snap, theta)
    assert abs(est.value - math.exp(-1.0)) < 4.0 * est.stderr


@pytest.mark.unit
def test_theta_range_checks():
    with pytest.raises(ValueError):
        ThetaFunction("constant", -1.0, (0.0,), (1.0,))
    with pytest.raises(ValueError):
        ThetaFunction("constant", 0.2, (0.0,), (1.0,))
    bump = ThetaFunction("bump", -0.9, (0.0, 0.0), (2.0, 2.0))
    assert bump.range_check()
    assert bump.evaluate([[1.0, 1.0]])[0] == pytest.approx(-0.9)
    assert bump.evaluate([[5.0, 5.0]])[0] == 0.0


@pytest.mark.unit
def test_split_accumulators_merge_exactly(rng):
    snap = _poisson_snapshot(rng, replicas=40)
    first = Snapshot(0.0, snap.window, snap.configurations[:17])
    second = Snapshot(0.0, snap.window, snap.configurations[17:])

    whole = count_stats(snap)
    merged = count_stats(first).merge(count_stats(second))
    assert whole.histogram == merged.histogram
    assert whole.mean_and_stderr(2) == merged.mean_and_stderr(2)

    edges = np.linspace(0.0, 2.0, 4)
    a = pair_stats(snap, edges)
    b = pair_stats(first, edges).merge(pair_stats(second, edges))
    assert a.replicas == b.replicas
    assert all(np.array_equal(x, y) for x, y in zip(a.counts, b.counts))

    theta = ThetaFunction("bump", -0.3, (1.0,), (4.0,))
    t_whole = theta_stats(snap, theta)
    t_merged = theta_stats(first, theta).merge(theta_stats(second, theta))
    assert t_whole.products == t_merged.products


@pytest.mark.integration
def test_poisson_count_test_accepts_poisson_sample(rng):
    snap = _poisson_snapshot(rng)
    result = poisson_count_test(snap, Box((0.0,), (5.0,)), kappa=2.0)
    assert result["dof"] > 0
    assert result["pvalue"] > 1e-4


@pytest.mark.unit
def test_poisson_count_test_rejects_fixed_counts():
    window = TorusWindow(10.0, 1)
    configs = tuple(np.linspace(0.0, 9.9, 20).reshape(-1, 1) for _ in range(500))
    result = poisson_count_test(Snapshot(0.0, window, configs), None, kappa=2.0)
    assert result["pvalue"] < 1e-6


def _simulated_snapshot(params, side, end, intensity_0, replicas, seed):
    config = SimConfig(
        window=TorusWindow(side, params.dimension, params.interaction_radius),
        end_time=end,
        initial=InitialCondition("poisson", intensity_0),
        seed=seed,
        snapshot_times=(end,),
        max_population=1_000_000,
    )
    return replicate(config, params, replicas).snapshot(0)


@pytest.mark.integration
def test_pure_death_keeps_the_poisson_law():
    # independent thinning of Poisson(2) with survival e^{-1}
    snap = _simulated_snapshot(fixtures.pure_death_params(mortality=1.0), 10.0, 1.0, 2.0, 400, seed=21)
    kappa_t = 2.0 * math.exp(-1.0)

    est = pair_correlation(snap, [0.0, 1.0, 2.0, 4.0])
    for k2, se in zip(est.k2, est.stderr):
        assert abs(k2 - kappa_t**2) < 3.0 * se
    assert poisson_count_test(snap, None, kappa_t)["pvalue"] > 0.01


@pytest.mark.integration
def test_strong_competition_depletes_close_pairs():
    params = ModelParams(
        mortality=MortalityField("constant", 0.1),
        competition=RadialKernel("tophat", amplitude=3.0, scale=1.0),
        fission=FissionKernel("factorized", 1.0, RadialKernel("tophat", scale=4.0), dimension=1),
        dimension=1,
    )
    snap = _simulated_snapshot(params, 40.0, 0.5, 1.0, 300, seed=8)

    est = pair_correlation(snap, [0.0, 0.5, 3.0, 6.0])
    g = est.k2 / est.intensity**2
    g_se = est.stderr / est.intensity**2
    assert g[0] + 3.0 * g_se[0] < 1.0
    assert g[0] < g[2]


@pytest.mark.integration
def test_invariant_model_moments_stay_under_the_envelope_over_two_schedule_steps():
    params = fixtures.desk_params(mortality=1.5, b_mass=1.0)
    assert params.constants.m_lower > params.constants.b_mass
    plan = envelope_plan(params, 1.0, slack=0.1, epsilon=0.1)
    cert = domination_certificate(params.competition, params.fission, epsilon=0.1)
    steps = schedule(plan.alpha0, params.constants, cert.upsilon, cert.omega, horizon=0.01).steps
    assert len(steps) >= 2
    times = (0.0, steps[0].cumulative, steps[1].cumulative)

    config = SimConfig(
        window=TorusWindow(20.0, 1, params.interaction_radius),
        end_time=times[-1],
        initial=InitialCondition("poisson", 1.0),
        seed=12,
        snapshot_times=times,
        max_population=1_000_000,
    )
    ensemble = replicate(config, params, 200)
    for index, t in enumerate(times):
        report = factorial_moments(ensemble.snapshot(index), None, 3, envelope_kappa=plan.kappa(t))
        assert report.violations == ()
        for mean, se, bound in zip(report.moments, report.stderr, report.envelope):
            assert mean <= bound + 3.0 * se
