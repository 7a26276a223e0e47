"""
Ideal measurements under the projection postulate.

A resonantly driven two-level system (rf Rabi frequency omega2) is measured
every dt by the projector onto |1>. Outcomes form random strings of A's
(found in |1>) and PERP's; this module samples those strings, gives their
exact probabilities, and the closed-form mean lengths of the A and PERP
periods.
"""

import itertools
import logging
import math
from typing import Dict, Optional, Tuple

import numpy as np
from scipy.linalg import expm, null_space

from zeno_sim.errors import DivergentPeriodError, InsufficientDataError
from zeno_sim.models import IdealPeriodStats, Outcome, OutcomeSequence
from zeno_sim.periods import mean_and_se, run_lengths
from zeno_sim.quantum import DIM, StateVector, basis, normalize, u_two_level

logger = logging.getLogger(__name__)

# |<axis|state>|^2 this close to 1 counts as certain
CERTAINTY = 1e-14
# eigenvalues of P_perp H P_perp closer than this (relative to ||H||) share an eigenspace
DEGENERACY = 1e-9


def measure_projective(
    state: StateVector, axis: StateVector, rng: np.random.Generator
) -> Tuple[Outcome, StateVector]:
    overlap = np.vdot(axis, state)
    prob_a = abs(overlap) ** 2
    if prob_a >= 1.0 - CERTAINTY or rng.random() < prob_a:
        return Outcome.A, np.array(axis, dtype=complex)
    return Outcome.PERP, normalize(state - overlap * axis)


def flip_probability(omega2: float, dt: float) -> float:
    """sin^2(O2 dt / 2): chance that consecutive outcomes differ."""
    return math.sin(0.5 * omega2 * dt) ** 2


def _check_run(dt: float, n: int):
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if not dt > 0:
        raise ValueError(f"dt must be > 0, got {dt}")


def run_ideal_sequence(
    psi0: StateVector, omega2: float, dt: float, n: int, rng: np.random.Generator
) -> OutcomeSequence:
    """Evolve for dt and measure |1><1|, n times.

    Once the state has collapsed onto |1> or onto the 1-2 plane's
    complement of |1>, every further step flips the outcome with the fixed
    probability sin^2(O2 dt / 2), so the tail is drawn as a Markov chain.
    Initial states with a |3> component are measured step by step.
    """
    _check_run(dt, n)
    u = u_two_level(omega2, dt)
    axis = basis(1)
    state = normalize(np.asarray(psi0, dtype=complex))

    if abs(state[2]) > 0:
        outcomes = []
        for _ in range(n):
            outcome, state = measure_projective(u @ state, axis, rng)
            outcomes.append(outcome)
        return OutcomeSequence(outcomes, dt)

    first, _ = measure_projective(u @ state, axis, rng)
    flips = rng.random(n - 1) < flip_probability(omega2, dt)
    parity = np.cumsum(flips) % 2 == 1
    is_a = np.concatenate(([first is Outcome.A], parity ^ (first is Outcome.A)))
    return OutcomeSequence([Outcome.A if f else Outcome.PERP for f in is_a], dt)


def run_ideal_batch(
    psi0: StateVector,
    omega2: float,
    dt: float,
    n: int,
    n_runs: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """n_runs independent outcome strings as a bool array (True = A)."""
    _check_run(dt, n)
    state = normalize(np.asarray(psi0, dtype=complex))
    if abs(state[2]) > 0:
        raise ValueError("batched sampling needs psi0 in the 1-2 plane")
    prob_first = abs((u_two_level(omega2, dt) @ state)[0]) ** 2
    first = rng.random(n_runs) < prob_first
    flips = rng.random((n_runs, n - 1)) < flip_probability(omega2, dt)
    parity = np.cumsum(flips, axis=1) % 2 == 1
    return np.concatenate((first[:, None], parity ^ first[:, None]), axis=1)


def sequence_probability(
    seq: OutcomeSequence, psi0: StateVector, omega2: float
) -> float:
    """Exact probability of an outcome string from the projector/propagator chain."""
    u = u_two_level(omega2, seq.dt)
    project_a = np.zeros((DIM, DIM), dtype=complex)
    project_a[0, 0] = 1.0
    project_perp = np.eye(DIM, dtype=complex) - project_a
    state = normalize(np.asarray(psi0, dtype=complex))
    for outcome in seq.outcomes:
        state = (project_a if outcome is Outcome.A else project_perp) @ (u @ state)
    return float(np.real(np.vdot(state, state)))


def all_sequence_probabilities(
    psi0: StateVector, omega2: float, dt: float, n: int
) -> Dict[str, float]:
    """Probabilities of all 2^n strings, keyed like 'A PERP A'."""
    probabilities = {}
    for combo in itertools.product((Outcome.A, Outcome.PERP), repeat=n):
        key = " ".join(o.value for o in combo)
        probabilities[key] = sequence_probability(
            OutcomeSequence(list(combo), dt), psi0, omega2
        )
    return probabilities


def survival_probability(omega2: float, dt: float, n: int) -> float:
    """Probability of n consecutive A outcomes starting from |1>."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return math.cos(0.5 * omega2 * dt) ** (2 * n)


def mean_period_exact(omega2: float, dt: float) -> float:
    """T1 = T2 = dt / sin^2(O2 dt / 2)."""
    if not dt > 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    flip = flip_probability(omega2, dt)
    if flip < 1e-15:
        raise DivergentPeriodError(
            f"O2*dt = {omega2 * dt} is a multiple of 2*pi; periods never end"
        )
    return dt / flip


def _checked_operator(h: np.ndarray, a: StateVector) -> Tuple[np.ndarray, np.ndarray, float]:
    """Hermitian h, normalized a and the energy variance of a."""
    h = np.asarray(h, dtype=complex)
    if not np.allclose(h, h.conj().T, atol=1e-12):
        raise ValueError("h must be Hermitian")
    a = normalize(np.asarray(a, dtype=complex))
    h_a = h @ a
    mean = np.vdot(a, h_a).real
    variance = np.vdot(h_a, h_a).real - mean ** 2
    scale = max(np.linalg.norm(h, 2) ** 2, 1e-300)
    if variance <= 1e-12 * scale:
        raise DivergentPeriodError("|a> is an eigenvector of H; periods never end")
    return h, a, variance


def _perp_start(
    h: np.ndarray, a: np.ndarray, phi_perp: Optional[StateVector], dt: float
) -> np.ndarray:
    if phi_perp is None:
        u_a = expm(-1j * h * dt) @ a
        phi_perp = u_a - np.vdot(a, u_a) * a
    return normalize(np.asarray(phi_perp, dtype=complex))


def mean_period_general(
    h: np.ndarray,
    a: StateVector,
    phi_perp: Optional[StateVector],
    dt: float,
) -> Tuple[float, float]:
    """Leading-order (small dt) mean durations T_a and T_perp for a Hermitian h.

    phi_perp defaults to P_perp U(dt)|a> normalized. Within the range of
    P_perp, K = P_perp H P_perp turns the state many times before a PERP
    period ends, so the spread D = P_perp H^2 P_perp - K^2 enters averaged
    over the eigenspaces of K. This is D itself whenever K and D commute,
    as for any two-level system. The inverse is a pseudo-inverse on the
    range of P_perp.
    """
    if not dt > 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    h, a, variance = _checked_operator(h, a)
    phi_perp = _perp_start(h, a, phi_perp, dt)

    # orthonormal basis of the range of P_perp
    q = null_space(np.conj(a)[None, :])
    k = q.conj().T @ h @ q
    spread = q.conj().T @ h @ h @ q - k @ k
    levels, vectors = np.linalg.eigh(k)
    splits = np.flatnonzero(np.diff(levels) > DEGENERACY * np.linalg.norm(h, 2)) + 1
    averaged = np.zeros_like(spread)
    for block in np.split(vectors, splits, axis=1):
        projector = block @ block.conj().T
        averaged += projector @ spread @ projector
    inverse = np.linalg.pinv(averaged, rcond=1e-12, hermitian=True)

    phi = q.conj().T @ phi_perp
    t_a = 1.0 / (dt * variance)
    t_perp = np.vdot(phi, inverse @ phi).real / dt
    return t_a, t_perp


def mean_period_series(
    h: np.ndarray,
    a: StateVector,
    dt: float,
    phi_perp: Optional[StateVector] = None,
    tail: float = 1e-16,
    max_doublings: int = 64,
) -> Tuple[float, float]:
    """Exact mean durations T_a and T_perp at finite dt.

    T_a = dt / (1 - |<a|U|a>|^2) and T_perp = dt * sum_n ||M^n phi_perp||^2
    with M = P_perp U P_perp. The PERP sum is doubled by repeated squaring
    until ||M^n phi_perp||^2 drops below tail.
    """
    if not dt > 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    h, a, _ = _checked_operator(h, a)
    phi = _perp_start(h, a, phi_perp, dt)
    u = expm(-1j * h * dt)
    stay = abs(np.vdot(a, u @ a)) ** 2
    if stay >= 1.0 - CERTAINTY:
        raise DivergentPeriodError(f"|<a|U(dt)|a>|^2 = {stay}; A periods never end")
    t_a = dt / (1.0 - stay)

    project_perp = np.eye(h.shape[0], dtype=complex) - np.outer(a, np.conj(a))
    power = project_perp @ u @ project_perp
    # sum of (M^n)^H M^n over the first 2^doublings terms
    gram = np.eye(h.shape[0], dtype=complex)
    for _ in range(max_doublings):
        moved = power @ phi
        if np.vdot(moved, moved).real <= tail:
            return t_a, dt * np.vdot(phi, gram @ phi).real
        gram = gram + power.conj().T @ gram @ power
        power = power @ power
    raise DivergentPeriodError(
        f"PERP series not converged after {2 ** max_doublings} measurements"
    )


def ideal_period_stats(seq: OutcomeSequence) -> IdealPeriodStats:
    """Mean A and PERP period durations, first and last (censored) runs dropped."""
    values, lengths = run_lengths(seq.as_flags())
    values, lengths = values[1:-1], lengths[1:-1]
    durations_a = lengths[values] * seq.dt
    durations_perp = lengths[~values] * seq.dt
    if len(durations_a) < 2 or len(durations_perp) < 2:
        raise InsufficientDataError(
            f"only {len(durations_a)} A and {len(durations_perp)} PERP complete periods"
        )
    logger.debug(
        f"{len(durations_a)} A periods, {len(durations_perp)} PERP periods"
    )
    mean_a, se_a = mean_and_se(durations_a)
    mean_perp, se_perp = mean_and_se(durations_perp)
    return IdealPeriodStats(
        mean_a=mean_a,
        mean_perp=mean_perp,
        count_a=len(durations_a),
        count_perp=len(durations_perp),
        se_a=se_a,
        se_perp=se_perp,
    )
