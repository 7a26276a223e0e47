"""
Tests for the master-equation oracle.

Test coverage includes:
- The right-hand side and its Liouvillian matrix.
- RK4 integration: trace, hermiticity, Rabi oscillation and pure decay.
- Steady states, including the non-unique case.
- Trajectory averages against the master equation, pulsed and continuous (large ensembles marked slow).
- Transition probabilities of one pulse cycle from the master equation against the eps expansion.
"""

import math

import numpy as np
import pytest

from zeno_sim.bloch import (
    check_density,
    compare_unraveling,
    cycle_transition_probs,
    default_step,
    ensemble_density,
    integrate,
    lindblad_rhs,
    liouvillian,
    steady_state,
)
from zeno_sim.errors import MasterEquationError, RecordMismatchError
from zeno_sim.jumps import sample_states, schedule_segments
from zeno_sim.models import PulseSchedule, Segment
from zeno_sim.quantum import VSystemParams, basis, density, normalize
from zeno_sim.theory import (
    continuous_limit_periods,
    mean_periods,
    pq_corrected,
    small_gap_periods,
)

PARAMS = VSystemParams(omega2=1.0, omega3=40.0, a3=20.0)


def random_density(rng):
    raw = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    rho = raw @ raw.conj().T
    return rho / np.trace(rho)


@pytest.mark.parametrize("probe_on", [True, False])
def test_rhs_preserves_trace_and_hermiticity(probe_on):
    rng = np.random.default_rng(0)
    for _ in range(20):
        drho = lindblad_rhs(random_density(rng), PARAMS, probe_on)
        assert abs(np.trace(drho)) <= 1e-10
        assert np.allclose(drho, drho.conj().T)


def test_liouvillian_matches_rhs():
    rng = np.random.default_rng(1)
    generator = liouvillian(PARAMS, True)
    assert generator.shape == (9, 9)
    rho = random_density(rng)
    assert np.allclose(generator @ rho.ravel(), lindblad_rhs(rho, PARAMS, True).ravel())


def test_default_step_ignores_absent_fields():
    assert default_step(PARAMS) == pytest.approx(1 / 40 / 200)
    assert default_step(VSystemParams(omega2=0.0, omega3=0.0, a3=2.0)) == pytest.approx(0.5 / 200)


def test_pulsed_integration_samples_boundaries():
    segments = schedule_segments(PulseSchedule(1.0, 1.0, n_pulses=4))
    trajectory = integrate(density(basis(1)), PARAMS, segments)
    assert np.allclose(trajectory.times, np.arange(9.0))
    for rho in trajectory.rhos:
        assert np.trace(rho).real == pytest.approx(1.0, abs=1e-10)
        assert np.allclose(rho, rho.conj().T, atol=1e-10)
    assert np.allclose(trajectory.rhos[0], density(basis(1)))


def test_rabi_oscillation_without_probe():
    params = VSystemParams(omega2=1.0, omega3=0.0, a3=20.0)
    times = np.linspace(0.0, 6.0, 25)
    trajectory = integrate(density(basis(1)), params, [Segment(6.0, True)], times)
    assert np.allclose(trajectory.rhos[:, 1, 1].real, np.sin(0.5 * times) ** 2, atol=1e-8)


def test_pure_decay_of_level_three():
    params = VSystemParams(omega2=0.0, omega3=0.0, a3=2.0)
    times = np.linspace(0.0, 3.0, 13)
    trajectory = integrate(density(basis(3)), params, [Segment(3.0, False)], times)
    assert np.allclose(trajectory.rhos[:, 2, 2].real, np.exp(-2.0 * times), atol=1e-8)
    assert np.allclose(trajectory.rhos[:, 0, 0].real, 1 - np.exp(-2.0 * times), atol=1e-8)


def test_integration_rejects_bad_grids():
    segments = [Segment(1.0, True)]
    with pytest.raises(ValueError):
        integrate(density(basis(1)), PARAMS, segments, [0.5, 0.2])
    with pytest.raises(RecordMismatchError):
        integrate(density(basis(1)), PARAMS, segments, [0.0, 2.0])


def test_check_density_reports_diagnostics():
    check_density(density(basis(2)), 0.0)
    broken = np.diag([1.2, -0.2, 0.0]).astype(complex)
    with pytest.raises(MasterEquationError) as info:
        check_density(broken, 1.5)
    assert info.value.diagnostics["t"] == 1.5
    assert info.value.diagnostics["min_eigenvalue"] == pytest.approx(-0.2)


def test_steady_state_of_driven_transition():
    params = VSystemParams(omega2=0.0, omega3=40.0, a3=20.0)
    rho = steady_state(params, True, levels=(1, 3))
    assert rho[2, 2].real == pytest.approx(1600 / 3600, abs=1e-10)
    assert np.trace(rho).real == pytest.approx(1.0)
    assert rho[1, 1] == 0
    with pytest.raises(ValueError):
        steady_state(params, True)


def test_ensemble_density():
    states = np.array([[basis(1)], [basis(2)]])
    assert np.allclose(ensemble_density(states)[0], np.diag([0.5, 0.5, 0.0]))


PULSED_SEGMENTS = schedule_segments(PulseSchedule(1.0, 1.0, n_pulses=2))
CONTINUOUS_SEGMENTS = [Segment(4.0, True)]


def _unraveling(n, seed, segments=PULSED_SEGMENTS, n_points=21):
    grid = np.linspace(0.0, 4.0, n_points)
    master = integrate(density(basis(1)), PARAMS, segments, grid)
    rng = np.random.default_rng(seed)
    states = np.array([sample_states(PARAMS, segments, grid, rng) for _ in range(n)])
    return states, master, grid


def test_trajectory_average_follows_master_equation():
    states, master, grid = _unraveling(200, 2)
    result = compare_unraveling(states, master, grid)
    assert result.within_bound
    assert result.bound == pytest.approx(5 / math.sqrt(200))


def test_unraveling_grid_mismatch():
    states, master, grid = _unraveling(5, 3)
    with pytest.raises(RecordMismatchError):
        compare_unraveling(states[:, :-1], master)
    with pytest.raises(RecordMismatchError):
        compare_unraveling(states, master, grid + 0.1)


def test_superposition_start():
    segments = [Segment(0.5, True), Segment(0.5, False)]
    rho0 = density(normalize(basis(1) + basis(2)))
    trajectory = integrate(rho0, PARAMS, segments, [0.0, 1.0])
    assert np.allclose(trajectory.rhos[0], rho0)
    assert np.trace(trajectory.rhos[1]).real == pytest.approx(1.0, abs=1e-10)


@pytest.mark.slow
@pytest.mark.parametrize("segments", [PULSED_SEGMENTS, CONTINUOUS_SEGMENTS])
def test_large_ensemble_unraveling(segments):
    states, master, grid = _unraveling(10_000, 4, segments, n_points=100)
    result = compare_unraveling(states, master, grid)
    assert result.n_times == 100
    assert result.max_deviation <= 5 / math.sqrt(10_000)


@pytest.mark.slow
def test_unraveling_deviation_shrinks_with_ensemble_size():
    small = compare_unraveling(*_unraveling(400, 5))
    large = compare_unraveling(*_unraveling(6400, 6))
    assert small.within_bound and large.within_bound
    # sixteen times the trajectories, a quarter of the noise
    assert large.max_deviation <= 0.5 * small.max_deviation


def test_cycle_probabilities_match_closed_form():
    for dt in (2.0, 1.0, 0.5):
        exact = mean_periods(cycle_transition_probs(PARAMS, dt, 1.0), dt, 1.0)
        expansion = mean_periods(pq_corrected(PARAMS, dt, 1.0), dt, 1.0)
        assert exact.t_light == pytest.approx(expansion.t_light, rel=3 * PARAMS.eps)
        assert exact.t_dark == pytest.approx(expansion.t_dark, rel=3 * PARAMS.eps)


def test_cycle_probabilities_at_small_eps():
    params = VSystemParams(omega2=1.0, omega3=200.0, a3=100.0)
    exact = mean_periods(cycle_transition_probs(params, 1.0, 0.5), 1.0, 0.5)
    expansion = mean_periods(pq_corrected(params, 1.0, 0.5), 1.0, 0.5)
    assert exact.t_light == pytest.approx(expansion.t_light, rel=3 * params.eps)
    assert exact.t_dark == pytest.approx(expansion.t_dark, rel=3 * params.eps)


def test_cycle_periods_level_off_as_gap_closes():
    gaps = (2.0, 1.0, 0.5, 0.1, 0.02)
    theories = [mean_periods(cycle_transition_probs(PARAMS, dt, 1.0), dt, 1.0) for dt in gaps]
    lights = [t.t_light for t in theories]
    darks = [t.t_dark for t in theories]
    assert lights == sorted(lights) and darks == sorted(darks)
    limit = continuous_limit_periods(PARAMS)
    assert lights[-1] == pytest.approx(limit.t_light, rel=0.3)
    assert darks[-1] == pytest.approx(limit.t_dark, rel=0.1)
    # no 1/dt^2 growth once the gap is shorter than the decay time
    assert lights[-1] < 0.2 * small_gap_periods(PARAMS.omega2, 0.02, 1.0).t_light


def test_cycle_probabilities_without_gap():
    probs = cycle_transition_probs(PARAMS, 0.0, 1.0)
    assert probs.corrected
    periods = mean_periods(probs, 0.0, 1.0)
    limit = continuous_limit_periods(PARAMS)
    # photonless windows inside a burst also end light periods
    assert periods.t_light == pytest.approx(limit.t_light, rel=0.15)
    assert periods.t_dark == pytest.approx(limit.t_dark, rel=0.1)


def test_cycle_probabilities_reject_bad_durations():
    with pytest.raises(ValueError):
        cycle_transition_probs(PARAMS, -0.1, 1.0)
    with pytest.raises(ValueError):
        cycle_transition_probs(PARAMS, 1.0, 0.0)
