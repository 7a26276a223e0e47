"""
Quantum-jump simulation of a single V system under probe pulses.

Between photon emissions the state follows the conditional Hamiltonian;
an emission happens when the squared norm of the conditional state drops
to a uniform random threshold, after which the atom is reset to |1>. The
rf field stays on throughout and its phase is continuous across pulse
boundaries. Jumps during a gap belong to the preceding pulse (they are
the decay of the |3> population left over at the pulse end).

Also holds the effective post-pulse density matrices and the no-emission
probability of a probe pulse, to first order in the small parameters.
"""

import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel

from zeno_sim.errors import RecordMismatchError
from zeno_sim.models import EmissionRecord, PulseOutcome, PulseSchedule, Segment
from zeno_sim.quantum import (
    DIM,
    NoJumpPropagator,
    StateVector,
    VSystemParams,
    basis,
    no_jump_propagator,
    normalize,
)

logger = logging.getLogger(__name__)

# "much greater than" in the regime conditions means at least this factor
REGIME_FACTOR = 10.0


def epsilons(params: VSystemParams) -> Tuple[float, float, float]:
    return params.eps_p, params.eps_r, params.eps_a


def photon_rate(params: VSystemParams) -> float:
    """Mean emission rate A3 * rho33 of the saturated 1-3 transition."""
    o2 = params.omega3 ** 2
    return params.a3 * o2 / (params.a3 ** 2 + 2 * o2)


class ConditionCheck(BaseModel):
    name: str
    ratio: float
    satisfied: bool
    note: str = ""


class ValidityReport(BaseModel):
    """Regime conditions under which a probe pulse acts as a level measurement."""

    eps_p: float
    eps_r: float
    eps_a: float
    checks: List[ConditionCheck]

    class Config:
        schema_extra = {
            "example": {
                "eps_p": 0.0125,
                "eps_r": 0.025,
                "eps_a": 0.05,
                "checks": [
                    {"name": "pulse_length", "ratio": 20.0, "satisfied": True, "note": ""}
                ],
            }
        }

    @property
    def all_satisfied(self) -> bool:
        return all(check.satisfied for check in self.checks)

    def violations(self) -> List[ConditionCheck]:
        return [check for check in self.checks if not check.satisfied]


def _check(name: str, ratio: float, note: str = "") -> ConditionCheck:
    satisfied = ratio >= REGIME_FACTOR
    return ConditionCheck(
        name=name, ratio=ratio, satisfied=satisfied, note="" if satisfied else note
    )


def validity_report(params: VSystemParams, schedule: PulseSchedule) -> ValidityReport:
    eps_p, eps_r, eps_a = epsilons(params)
    checks = []
    if schedule.continuous:
        checks.append(
            ConditionCheck(
                name="pulse_length",
                ratio=float("inf"),
                satisfied=True,
                note="continuous driving; pulse length not used",
            )
        )
    else:
        slowest = max(
            1.0 / params.a3,
            params.a3 / params.omega3 ** 2 if params.omega3 > 0 else float("inf"),
        )
        checks.append(
            _check(
                "pulse_length",
                schedule.pulse_duration / slowest,
                "pulse too short to act as a measurement",
            )
        )
    for name, eps in (("eps_p", eps_p), ("eps_r", eps_r), ("eps_a", eps_a)):
        ratio = 1.0 / eps if eps > 0 else float("inf")
        checks.append(_check(name, ratio, f"{name} is not small"))

    gap_note = "gap regime violated; analytics must use the corrected p~, q~"
    checks.append(_check("gap_decay", schedule.gap * params.a3, gap_note))
    eps = params.eps
    rotation = (params.omega2 * schedule.gap) ** 2 / eps if eps > 0 else float("inf")
    checks.append(_check("gap_rotation", rotation, gap_note))

    report = ValidityReport(eps_p=eps_p, eps_r=eps_r, eps_a=eps_a, checks=checks)
    for check in report.violations():
        logger.warning(f"Regime check {check.name}: ratio {check.ratio:.3g} < 10 ({check.note})")
    return report


def _evolve(
    state: StateVector,
    propagator: NoJumpPropagator,
    duration: float,
    rng: np.random.Generator,
    start: float,
) -> Tuple[List[float], StateVector]:
    """Jump-unravel one stretch of constant driving.

    Returns the absolute jump times and the normalized end state.
    """
    jumps = []
    elapsed = 0.0
    survival = propagator.survival(state)
    while True:
        remaining = duration - elapsed
        if remaining <= 0:
            return jumps, state
        r = rng.random()
        if survival(remaining) > r:
            return jumps, normalize(propagator.propagate(state, remaining))
        elapsed += survival.invert(r, remaining)
        jumps.append(start + elapsed)
        state = basis(1)
        survival = propagator.reset_survival


def simulate_pulse(
    state: StateVector,
    params: VSystemParams,
    pulse_duration: float,
    rng: np.random.Generator,
) -> PulseOutcome:
    if pulse_duration < 0:
        raise ValueError(f"pulse_duration must be >= 0, got {pulse_duration}")
    state = normalize(np.asarray(state, dtype=complex))
    jumps, post_state = _evolve(
        state, no_jump_propagator(params, True), pulse_duration, rng, 0.0
    )
    return PulseOutcome(photon_count=len(jumps), post_state=post_state, jump_times=jumps)


def simulate_gap(
    state: StateVector,
    params: VSystemParams,
    gap_duration: float,
    rng: np.random.Generator,
) -> Tuple[int, StateVector]:
    """Probe off, rf on, decay channel open."""
    if gap_duration < 0:
        raise ValueError(f"gap_duration must be >= 0, got {gap_duration}")
    state = normalize(np.asarray(state, dtype=complex))
    jumps, post_state = _evolve(
        state, no_jump_propagator(params, False), gap_duration, rng, 0.0
    )
    return len(jumps), post_state


def schedule_segments(schedule: PulseSchedule) -> List[Segment]:
    if schedule.continuous:
        return [Segment(schedule.duration, True)]
    segments = []
    for _ in range(schedule.pulse_count):
        segments.append(Segment(schedule.pulse_duration, True))
        segments.append(Segment(schedule.gap, False))
    return segments


def run_trajectory(
    params: VSystemParams, schedule: PulseSchedule, rng: np.random.Generator
) -> EmissionRecord:
    """Alternate probe pulses and gaps starting from |1>."""
    if schedule.continuous:
        raise ValueError("run_trajectory needs a pulsed schedule (gap > 0)")
    probe = no_jump_propagator(params, True)
    dark = no_jump_propagator(params, False)
    state = basis(1)
    jump_times: List[float] = []
    pulse_index: List[Optional[int]] = []
    for k in range(schedule.pulse_count):
        start = schedule.pulse_start(k)
        in_pulse, state = _evolve(state, probe, schedule.pulse_duration, rng, start)
        in_gap, state = _evolve(
            state, dark, schedule.gap, rng, start + schedule.pulse_duration
        )
        jump_times.extend(in_pulse)
        jump_times.extend(in_gap)
        pulse_index.extend([k] * (len(in_pulse) + len(in_gap)))
    logger.debug(
        f"Pulsed trajectory: {len(jump_times)} photons over {schedule.pulse_count} pulses"
    )
    return EmissionRecord(jump_times, pulse_index, params, schedule)


def run_continuous(
    params: VSystemParams, total_duration: float, rng: np.random.Generator
) -> EmissionRecord:
    """Both fields on for total_duration, starting from |1>."""
    schedule = PulseSchedule.continuous_drive(total_duration)
    jump_times, _ = _evolve(
        basis(1), no_jump_propagator(params, True), total_duration, rng, 0.0
    )
    logger.debug(f"Continuous trajectory: {len(jump_times)} photons over {total_duration}")
    return EmissionRecord(jump_times, [None] * len(jump_times), params, schedule)


def sample_states(
    params: VSystemParams,
    segments: Sequence[Segment],
    sample_times: Sequence[float],
    rng: np.random.Generator,
    initial: Optional[StateVector] = None,
) -> np.ndarray:
    """Normalized conditional states of one trajectory at sorted sample_times."""
    times = np.asarray(sample_times, dtype=float)
    if np.any(np.diff(times) < 0) or (len(times) and times[0] < 0):
        raise ValueError("sample_times must be sorted and non-negative")
    state = basis(1) if initial is None else normalize(np.asarray(initial, dtype=complex))
    samples = np.empty((len(times), DIM), dtype=complex)
    clock = 0.0
    i = 0
    for segment in segments:
        propagator = no_jump_propagator(params, segment.probe_on)
        end = clock + segment.duration
        while i < len(times) and times[i] <= end:
            _, state = _evolve(state, propagator, times[i] - clock, rng, clock)
            clock = times[i]
            samples[i] = state
            i += 1
        _, state = _evolve(state, propagator, end - clock, rng, clock)
        clock = end
    if i < len(times):
        raise RecordMismatchError(
            f"sample time {times[i]} lies beyond the schedule end {clock}"
        )
    return samples


def effective_rho_no_emission(params: VSystemParams) -> np.ndarray:
    """State right at the end of a pulse without emission, first order in eps."""
    rho = np.zeros((DIM, DIM), dtype=complex)
    rho[1, 1] = 1.0
    rho[0, 1] = -1j * params.eps_p
    rho[1, 0] = 1j * params.eps_p
    rho[1, 2] = rho[2, 1] = -params.eps_r
    return rho


def effective_rho_emission(params: VSystemParams, pulse_duration: float) -> np.ndarray:
    """State right at the end of a pulse with at least one emission, first order in eps."""
    a2 = params.a3 ** 2
    o2 = params.omega3 ** 2
    pumped = params.eps_p * a2 * params.omega2 * pulse_duration
    coherence_12 = 1j * params.eps_p * a2
    coherence_13 = 1j * params.a3 * params.omega3
    coherence_23 = params.eps_r * (a2 + o2)
    rho = np.array(
        [
            [a2 + o2, coherence_12, coherence_13],
            [np.conj(coherence_12), pumped, coherence_23],
            [np.conj(coherence_13), coherence_23, o2],
        ],
        dtype=complex,
    )
    return rho / (a2 + 2 * o2 + pumped)


def effective_rho_no_emission_2x2(params: VSystemParams) -> np.ndarray:
    """1-2 block of the no-emission state once the transitory decay is over."""
    return np.array(
        [[0.0, -1j * params.eps_p], [1j * params.eps_p, 1.0]], dtype=complex
    )


def after_transient_decay(rho: np.ndarray, params: VSystemParams) -> np.ndarray:
    """Let the |3> population decay into |1> after a pulse, rf rotation factored out.

    The decaying |3> population feeds |1> while the rf field keeps acting,
    which shifts rho12 by -(i/2) eps_a rho33 relative to an instantaneous
    decay.
    """
    decayed = np.array(rho, dtype=complex)
    rho33 = decayed[2, 2].real
    decayed[0, 0] += rho33
    decayed[0, 1] -= 0.5j * params.eps_a * rho33
    decayed[1, 0] = np.conj(decayed[0, 1])
    decayed[2, :] = 0.0
    decayed[:, 2] = 0.0
    return decayed


def effective_rho_emission_decayed(
    params: VSystemParams, pulse_duration: float
) -> np.ndarray:
    """1-2 block of the emission state once the transitory decay is over."""
    a2 = params.a3 ** 2
    o2 = params.omega3 ** 2
    pumped = params.eps_p * params.omega2 * pulse_duration * a2
    coherence = 1j * params.eps_p * a2 - 0.5j * params.eps_a * o2
    rho = np.array(
        [[a2 + 2 * o2, coherence], [np.conj(coherence), pumped]], dtype=complex
    )
    return rho / (a2 + 2 * o2 + pumped)


def p0_probability(
    rho: np.ndarray, params: VSystemParams, pulse_duration: float
) -> float:
    """Probability of no photon during a probe pulse starting from rho."""
    rho = np.asarray(rho, dtype=complex)
    rho22 = rho[1, 1].real
    value = (
        rho22
        - params.eps_p * params.omega2 * pulse_duration * rho22
        + 2 * params.eps_p * rho[0, 1].imag
        - 2 * params.eps_r * rho[1, 2].real
    )
    clamped = min(1.0, max(0.0, value))
    if clamped != value:
        logger.debug(f"P0 clamped from {value:.6g}")
    return clamped
