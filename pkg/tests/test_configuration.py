import numpy as np
import pytest

from fission_dynamics.configuration import (
    Configuration,
    KahanSum,
    TorusWindow,
    brute_force_energies,
    energies,
)
from fission_dynamics.errors import BadIndex, OutOfWindow
from fission_dynamics.testing import fixtures


def _window(params, side=12.0):
    return TorusWindow(side, params.dimension, params.interaction_radius)


@pytest.mark.unit
def test_minimum_image_distance():
    w = TorusWindow(10.0, 2)
    assert w.distance([0.5, 0.5], [9.5, 9.5]) == pytest.approx(np.sqrt(2.0))
    assert w.wrap([-0.5, 10.25]).tolist() == pytest.approx([9.5, 0.25])


@pytest.mark.unit
def test_insert_outside_window_rejected(desk_params):
    gamma = Configuration(_window(desk_params), desk_params)
    with pytest.raises(OutOfWindow):
        gamma.insert([12.0])


@pytest.mark.unit
def test_remove_bad_index(desk_params):
    gamma = Configuration(_window(desk_params), desk_params)
    gamma.insert([1.0])
    with pytest.raises(BadIndex):
        gamma.remove(3)


@pytest.mark.unit
def test_two_points_in_range_compete(desk_params):
    gamma = Configuration.from_points(_window(desk_params), desk_params, [[1.0], [1.5]])
    assert gamma.competition_rates.tolist() == [1.0, 1.0]
    # Ψ = M + E^a + <b>|γ| = 2*0.5 + 2*1 + 2*1
    assert gamma.total_rate == pytest.approx(5.0)


@pytest.mark.unit
def test_pair_across_the_boundary_competes(desk_params):
    gamma = Configuration.from_points(_window(desk_params), desk_params, [[0.2], [11.9]])
    assert gamma.competition_rates.tolist() == [1.0, 1.0]


@pytest.mark.integration
def test_incremental_rates_match_brute_force(rng):
    params = fixtures.desk_params()
    window = TorusWindow(15.0, 1, params.interaction_radius)
    gamma = Configuration(window, params)
    for x in rng.random((60, 1)) * 15.0:
        gamma.insert(x)
    for _ in range(25):
        gamma.remove(int(rng.integers(gamma.size)))
    for x in rng.random((10, 1)) * 15.0:
        gamma.insert(x)

    e_a, e_b, m, psi = energies(gamma)
    ref = brute_force_energies(window, params, gamma.points)
    assert e_a == pytest.approx(ref[0], rel=1e-12, abs=1e-12)
    assert e_b == pytest.approx(ref[1], rel=1e-10)
    assert m == pytest.approx(ref[2])
    assert psi == pytest.approx(ref[3], rel=1e-12)


@pytest.mark.integration
def test_recompute_removes_no_real_drift(rng):
    params = fixtures.desk_params()
    window = TorusWindow(15.0, 1, params.interaction_radius)
    gamma = Configuration(window, params)
    for x in rng.random((40, 1)) * 15.0:
        gamma.insert(x)
    for _ in range(20):
        gamma.remove(0)
    assert gamma.recompute() < 1e-12


@pytest.mark.unit
def test_emptying_resets_totals(desk_params):
    gamma = Configuration.from_points(_window(desk_params), desk_params, [[1.0], [1.3], [5.0]])
    while gamma.size:
        gamma.remove(gamma.size - 1)
    assert gamma.total_rate == 0.0
    assert gamma.competition_total == 0.0


@pytest.mark.unit
def test_kahan_sum_keeps_small_terms():
    acc = KahanSum(1.0)
    for _ in range(1000):
        acc.add(1e-16)
    assert acc.value == pytest.approx(1.0 + 1e-13, rel=1e-15)


@pytest.mark.unit
def test_window_too_narrow_for_interactions(desk_params):
    with pytest.raises(ValueError):
        Configuration(TorusWindow(12.0, 1, 0.5), desk_params)
