"""
Self-checks run by `zeno_sim.cli verify`.

Each check compares one part of the simulator with an independent answer:
closed-form unitaries, exhaustive outcome enumeration, limits of the
transition probabilities, the master equation. Stochastic checks use fixed
seeds and a |z| <= Z_LIMIT acceptance band.
"""

import itertools
import logging
import math
from typing import Callable, List, Optional

import numpy as np
from pydantic import BaseModel
from scipy import stats

from zeno_sim import bloch, ideal, jumps, theory
from zeno_sim.errors import ZenoError
from zeno_sim.models import MasterTrajectory, Outcome, PulseSchedule
from zeno_sim.periods import z_score
from zeno_sim.quantum import (
    NoJumpPropagator,
    VSystemParams,
    basis,
    conditional_hamiltonian,
    density,
    no_jump_propagator,
    normalize,
    rf_hamiltonian,
    u_two_level,
)

logger = logging.getLogger(__name__)

Z_LIMIT = 4.0
ACCEPTANCE_PARAMS = VSystemParams(omega2=1.0, omega3=40.0, a3=20.0)
# eps = 0.01
SMALL_EPS_PARAMS = VSystemParams(omega2=1.0, omega3=200.0, a3=100.0)
SMALL_EPS_PULSE = 0.5
UNRAVELING_SCHEDULE = PulseSchedule(1.0, 1.0, n_pulses=4)

PqFunction = Callable[[VSystemParams, float, float], object]


class CheckResult(BaseModel):
    name: str
    passed: bool
    detail: str


class VerifyReport(BaseModel):
    passed: bool
    checks: List[CheckResult]

    @property
    def failures(self) -> List[CheckResult]:
        return [check for check in self.checks if not check.passed]


def _random_states(rng: np.random.Generator, n: int) -> np.ndarray:
    raw = rng.normal(size=(n, 3)) + 1j * rng.normal(size=(n, 3))
    return raw / np.linalg.norm(raw, axis=1, keepdims=True)


def check_two_level_unitary(rng: np.random.Generator) -> CheckResult:
    omegas = rng.uniform(0.0, 5.0, 1000)
    times = rng.uniform(0.0, 10.0, 1000)
    unitarity = semigroup = rabi = 0.0
    for omega, t in zip(omegas, times):
        u = u_two_level(omega, t)
        unitarity = max(unitarity, np.max(np.abs(u.conj().T @ u - np.eye(3))))
        half = 0.5 * t
        semigroup = max(
            semigroup,
            np.max(np.abs(u - u_two_level(omega, half) @ u_two_level(omega, t - half))),
        )
        rabi = max(rabi, abs(abs(u[1, 0]) ** 2 - math.sin(0.5 * omega * t) ** 2))
    worst = max(unitarity, semigroup, rabi)
    return CheckResult(
        name="two_level_unitary",
        passed=worst <= 1e-12,
        detail=f"unitarity {unitarity:.2e}, semigroup {semigroup:.2e}, rabi {rabi:.2e}",
    )


def check_conditional_norm(rng: np.random.Generator) -> CheckResult:
    times = np.linspace(0.0, 2.0, 41)
    rise = composition = 0.0
    for probe_on in (True, False):
        propagator = no_jump_propagator(ACCEPTANCE_PARAMS, probe_on)
        for state in _random_states(rng, 100):
            norms = propagator.survival(state).values(times)
            rise = max(rise, float(np.max(np.diff(norms))))
            t1, t2 = rng.uniform(0.0, 1.0, 2)
            direct = propagator.propagate(state, t1 + t2)
            stepped = propagator.propagate(propagator.propagate(state, t1), t2)
            composition = max(composition, float(np.max(np.abs(direct - stepped))))
    decay_params = VSystemParams(omega2=0.0, omega3=0.0, a3=2.0)
    survival = no_jump_propagator(decay_params, True).survival(basis(3))
    decay = float(np.max(np.abs(survival.values(times) - np.exp(-2.0 * times))))
    passed = rise <= 1e-12 and composition <= 1e-10 and decay <= 1e-12
    return CheckResult(
        name="conditional_norm",
        passed=passed,
        detail=f"max norm rise {rise:.2e}, composition {composition:.2e}, "
        f"pure decay {decay:.2e}",
    )


def check_enumeration_sum(rng: np.random.Generator) -> CheckResult:
    worst = 0.0
    for psi0 in (basis(1), normalize(basis(1) + basis(2))):
        dt = float(rng.uniform(0.1, 3.0))
        total = sum(ideal.all_sequence_probabilities(psi0, 1.0, dt, 8).values())
        worst = max(worst, abs(total - 1.0))
    return CheckResult(
        name="enumeration_sum",
        passed=worst <= 1e-12,
        detail=f"largest |sum - 1| over 256 strings: {worst:.2e}",
    )


def check_enumeration_frequencies(rng: np.random.Generator) -> CheckResult:
    n, samples = 4, 200_000
    dt = math.pi / 3
    exact = ideal.all_sequence_probabilities(basis(1), 1.0, dt, n)
    flags = ideal.run_ideal_batch(basis(1), 1.0, dt, n, samples, rng)
    # product((A, PERP)) order: PERP sets the bit
    index = ((~flags) * (1 << np.arange(n - 1, -1, -1))).sum(axis=1)
    observed = np.bincount(index, minlength=2 ** n)
    keys = [
        " ".join(o.value for o in combo)
        for combo in itertools.product((Outcome.A, Outcome.PERP), repeat=n)
    ]
    expected = samples * np.array([exact[key] for key in keys])
    result = stats.chisquare(observed, expected)
    return CheckResult(
        name="enumeration_frequencies",
        passed=result.pvalue > 1e-3,
        detail=f"chi2 {result.statistic:.3g} on {2 ** n - 1} dof, p = {result.pvalue:.3g}",
    )


def check_zeno_survival(rng: np.random.Generator) -> CheckResult:
    omega2 = 1.0
    t_pi = math.pi / omega2
    curve = [ideal.survival_probability(omega2, t_pi / n, n) for n in (4, 16, 64, 256)]
    monotone = all(b > a for a, b in zip(curve, curve[1:]))
    analytic = curve[2]
    runs = 100_000
    flags = ideal.run_ideal_batch(basis(1), omega2, t_pi / 64, 64, runs, rng)
    estimate = float(np.mean(flags.all(axis=1)))
    se = math.sqrt(analytic * (1 - analytic) / runs)
    z = (estimate - analytic) / se
    passed = monotone and abs(analytic - 0.96218) <= 1e-5 and abs(z) <= Z_LIMIT
    return CheckResult(
        name="zeno_survival",
        passed=passed,
        detail=f"survival {['%.5f' % v for v in curve]}, n=64 Monte Carlo "
        f"{estimate:.5f} (z = {z:.2f})",
    )


def _rounded(z: Optional[float]) -> Optional[float]:
    return None if z is None else round(z, 2)


def check_ideal_mean_period(rng: np.random.Generator) -> CheckResult:
    omega2, dt = 1.0, math.pi / 2
    seq = ideal.run_ideal_sequence(basis(1), omega2, dt, 200_000, rng)
    periods = ideal.ideal_period_stats(seq)
    expected = ideal.mean_period_exact(omega2, dt)
    z_a = z_score(periods.mean_a, expected, periods.se_a)
    z_perp = z_score(periods.mean_perp, expected, periods.se_perp)
    t_a, t_perp = ideal.mean_period_general(rf_hamiltonian(omega2), basis(1), None, 0.01)
    small_dt = ideal.mean_period_exact(omega2, 0.01)
    general = max(abs(t_a / small_dt - 1), abs(t_perp / small_dt - 1))
    passed = (
        z_a is not None
        and z_perp is not None
        and abs(z_a) <= Z_LIMIT
        and abs(z_perp) <= Z_LIMIT
        and general <= 1e-4
    )
    return CheckResult(
        name="ideal_mean_period",
        passed=passed,
        detail=f"T1 {periods.mean_a:.4f} (z = {_rounded(z_a)}), T2 {periods.mean_perp:.4f} "
        f"(z = {_rounded(z_perp)}), theory {expected:.4f}; "
        f"small-dt general form off by {general:.1e}",
    )


def check_pq_consistency(pq_fn: PqFunction = theory.pq_corrected) -> CheckResult:
    """dt -> 0 must land on the continuous-driving limits."""
    worst_prob = worst_period = 0.0
    for params in (ACCEPTANCE_PARAMS, SMALL_EPS_PARAMS):
        for pulse in (0.5, 1.0):
            probs = pq_fn(params, 0.0, pulse)
            limit = theory.pq_continuous_limit(params, pulse)
            worst_prob = max(worst_prob, abs(probs.p - limit.p), abs(probs.q - limit.q))
            try:
                periods = theory.mean_periods(probs, 0.0, pulse)
            except ZenoError:
                worst_period = math.inf
                continue
            shelving = theory.continuous_limit_periods(params)
            worst_period = max(
                worst_period,
                abs(periods.t_light / shelving.t_light - 1),
                abs(periods.t_dark / shelving.t_dark - 1),
            )
    tiny = VSystemParams(omega2=1.0, omega3=1e9, a3=1e6)
    reduction = max(
        abs(pq_fn(tiny, dt, 1e-3).p - 0.5 * (1 - math.cos(dt))) for dt in (0.3, 1.0, 2.0)
    )
    passed = worst_prob <= 1e-12 and worst_period <= 1e-9 and reduction <= 1e-4
    return CheckResult(
        name="pq_consistency",
        passed=passed,
        detail=f"dt=0 vs continuous limit: probs {worst_prob:.2e}, periods "
        f"{worst_period:.2e}; eps->0 reduction {reduction:.2e}",
    )


def check_effective_projection(rng: np.random.Generator) -> CheckResult:
    params = SMALL_EPS_PARAMS
    eps = params.eps
    propagator = no_jump_propagator(params, True)
    no_emission = 0.0
    for start in (basis(2), normalize(basis(1) + basis(2))):
        rho = density(normalize(propagator.propagate(start, SMALL_EPS_PULSE)))
        no_emission = max(
            no_emission, float(np.max(np.abs(rho - jumps.effective_rho_no_emission(params))))
        )

    emitted = []
    for _ in range(1000):
        outcome = jumps.simulate_pulse(basis(1), params, SMALL_EPS_PULSE, rng)
        if outcome.fluoresced:
            emitted.append(density(outcome.post_state))
    emitted = np.array(emitted)
    average = emitted.mean(axis=0)
    se = emitted.std(axis=0) / math.sqrt(len(emitted))
    expected = jumps.effective_rho_emission(params, SMALL_EPS_PULSE)
    excess = np.abs(average - expected) - Z_LIMIT * se
    emission = float(np.max(excess))
    passed = no_emission <= 5 * eps ** 2 and emission <= 5 * eps
    return CheckResult(
        name="effective_projection",
        passed=passed,
        detail=f"no-emission branch {no_emission:.2e} (<= {5 * eps ** 2:.1e}), "
        f"emission branch beyond noise {emission:.2e} (<= {5 * eps:.1e})",
    )


def _p0_initial_states() -> List[np.ndarray]:
    mixed = 0.5 * (density(basis(1)) + density(basis(2)))
    return [
        density(basis(2)),
        density(basis(1)),
        mixed,
        density(normalize(basis(1) + 1j * basis(2))),
        density(normalize(basis(2) + basis(3))),
    ]


def exact_p0(rho: np.ndarray, params: VSystemParams, pulse_duration: float) -> float:
    """Trace of the conditionally evolved density matrix."""
    m = NoJumpPropagator(conditional_hamiltonian(params, True)).matrix(pulse_duration)
    return float(np.real(np.trace(m @ rho @ m.conj().T)))


def check_p0_formula() -> CheckResult:
    params = SMALL_EPS_PARAMS
    worst = max(
        abs(
            exact_p0(rho, params, SMALL_EPS_PULSE)
            - jumps.p0_probability(rho, params, SMALL_EPS_PULSE)
        )
        for rho in _p0_initial_states()
    )
    bound = 5 * params.eps ** 2
    return CheckResult(
        name="p0_formula",
        passed=worst <= bound,
        detail=f"largest deviation over 5 initial states {worst:.2e} (<= {bound:.1e})",
    )


def check_bloch_invariants() -> CheckResult:
    schedule = PulseSchedule(1.0, 1.0, n_pulses=4)
    segments = jumps.schedule_segments(schedule)
    try:
        bloch.integrate(density(basis(1)), ACCEPTANCE_PARAMS, segments)
    except ZenoError as exc:
        return CheckResult(name="bloch_invariants", passed=False, detail=str(exc))
    shelved = VSystemParams(omega2=0.0, omega3=40.0, a3=20.0)
    rho = bloch.steady_state(shelved, True, levels=(1, 3))
    expected = shelved.omega3 ** 2 / (shelved.a3 ** 2 + 2 * shelved.omega3 ** 2)
    error = abs(rho[2, 2].real - expected)
    return CheckResult(
        name="bloch_invariants",
        passed=error <= 1e-10,
        detail=f"pulsed integration within tolerances; steady rho33 off by {error:.2e}",
    )


def reference_master(n_points: int = 41) -> MasterTrajectory:
    """Master-equation density matrices over four reference pulses, from |1>."""
    segments = jumps.schedule_segments(UNRAVELING_SCHEDULE)
    grid = np.linspace(0.0, UNRAVELING_SCHEDULE.duration, n_points)
    return bloch.integrate(density(basis(1)), ACCEPTANCE_PARAMS, segments, sample_times=grid)


def check_unraveling(rng: np.random.Generator, n_trajectories: int = 200) -> CheckResult:
    segments = jumps.schedule_segments(UNRAVELING_SCHEDULE)
    master = reference_master()
    grid = master.times
    states = np.array(
        [
            jumps.sample_states(ACCEPTANCE_PARAMS, segments, grid, rng)
            for _ in range(n_trajectories)
        ]
    )
    result = bloch.compare_unraveling(states, master, grid)
    return CheckResult(
        name="unraveling",
        passed=result.within_bound,
        detail=f"{n_trajectories} trajectories, max deviation {result.max_deviation:.3f} "
        f"(bound {result.bound:.3f})",
    )


def check_waiting_times(rng: np.random.Generator) -> CheckResult:
    """Pure decay of |3>: first jump times must be exponential with rate A3."""
    params = VSystemParams(omega2=0.0, omega3=0.0, a3=1.0)
    waits = []
    for _ in range(2000):
        outcome = jumps.simulate_pulse(basis(3), params, 50.0, rng)
        if outcome.jump_times:
            waits.append(outcome.jump_times[0])
    result = stats.kstest(waits, "expon", args=(0.0, 1.0 / params.a3))
    return CheckResult(
        name="waiting_times",
        passed=result.pvalue > 1e-3,
        detail=f"KS statistic {result.statistic:.4f}, p = {result.pvalue:.3g}",
    )


def run_checks(seed: int = 0, pq_fn: PqFunction = theory.pq_corrected) -> VerifyReport:
    streams = iter(np.random.SeedSequence(seed).spawn(16))

    def rng() -> np.random.Generator:
        return np.random.default_rng(next(streams))

    checks = [
        ("two_level_unitary", lambda: check_two_level_unitary(rng())),
        ("conditional_norm", lambda: check_conditional_norm(rng())),
        ("enumeration_sum", lambda: check_enumeration_sum(rng())),
        ("enumeration_frequencies", lambda: check_enumeration_frequencies(rng())),
        ("zeno_survival", lambda: check_zeno_survival(rng())),
        ("ideal_mean_period", lambda: check_ideal_mean_period(rng())),
        ("pq_consistency", lambda: check_pq_consistency(pq_fn)),
        ("effective_projection", lambda: check_effective_projection(rng())),
        ("p0_formula", check_p0_formula),
        ("bloch_invariants", check_bloch_invariants),
        ("unraveling", lambda: check_unraveling(rng())),
        ("waiting_times", lambda: check_waiting_times(rng())),
    ]
    results = []
    for name, check in checks:
        try:
            result = check()
        except ZenoError as exc:
            result = CheckResult(name=name, passed=False, detail=str(exc))
        level = logging.INFO if result.passed else logging.ERROR
        logger.log(level, f"{'PASS' if result.passed else 'FAIL'} {result.name}: {result.detail}")
        results.append(result)
    return VerifyReport(passed=all(r.passed for r in results), checks=results)
