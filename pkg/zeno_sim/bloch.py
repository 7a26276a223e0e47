"""
Master (optical Bloch) equations of the driven V system.

    drho/dt = -i[H, rho] + A3 (|1><3| rho |3><1| - 1/2 {|3><3|, rho})

with H the Hermitian part of the conditional Hamiltonian. This is the
ensemble equation whose quantum-jump unraveling is simulated in
zeno_sim.jumps, so averaged trajectories must reproduce it.

Integration is classical fixed-step RK4. The right-hand side is linear, so
one RK4 step is the 9x9 matrix polynomial I + hL + (hL)^2/2 + (hL)^3/6 +
(hL)^4/24 of the Liouvillian L, and n steps are its n-th power.
"""

import logging
import math
from typing import Optional, Sequence

import numpy as np
from pydantic import BaseModel
from scipy.linalg import expm, null_space

from zeno_sim.errors import MasterEquationError, RecordMismatchError
from zeno_sim.models import MasterTrajectory, Segment, TransitionProbs
from zeno_sim.quantum import (
    DIM,
    VSystemParams,
    conditional_hamiltonian,
    split_hermitian,
)

logger = logging.getLogger(__name__)

STEPS_PER_TIMESCALE = 200
HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-10
POSITIVITY_TOL = 1e-8


def _decay_operator() -> np.ndarray:
    jump = np.zeros((DIM, DIM), dtype=complex)
    jump[0, 2] = 1.0
    return jump


def lindblad_rhs(rho: np.ndarray, params: VSystemParams, probe_on: bool) -> np.ndarray:
    h, _ = split_hermitian(conditional_hamiltonian(params, probe_on))
    jump = _decay_operator()
    jump_dag = jump.conj().T
    loss = jump_dag @ jump
    return -1j * (h @ rho - rho @ h) + params.a3 * (
        jump @ rho @ jump_dag - 0.5 * (loss @ rho + rho @ loss)
    )


def liouvillian(params: VSystemParams, probe_on: bool) -> np.ndarray:
    """Matrix of lindblad_rhs acting on row-major vec(rho)."""
    columns = []
    for index in range(DIM * DIM):
        unit = np.zeros(DIM * DIM, dtype=complex)
        unit[index] = 1.0
        columns.append(lindblad_rhs(unit.reshape(DIM, DIM), params, probe_on).ravel())
    return np.array(columns).T


def default_step(params: VSystemParams) -> float:
    """min(1/A3, 1/O3, 2pi/O2) / 200, ignoring fields that are off."""
    scales = [1.0 / params.a3]
    if params.omega3 > 0:
        scales.append(1.0 / params.omega3)
    if params.omega2 > 0:
        scales.append(2 * math.pi / params.omega2)
    return min(scales) / STEPS_PER_TIMESCALE


def _rk4_map(generator: np.ndarray, h: float) -> np.ndarray:
    scaled = h * generator
    step = np.eye(DIM * DIM, dtype=complex)
    term = np.eye(DIM * DIM, dtype=complex)
    for order in range(1, 5):
        term = term @ scaled / order
        step = step + term
    return step


def check_density(rho: np.ndarray, t: float) -> None:
    hermitian_error = float(np.max(np.abs(rho - rho.conj().T)))
    trace_error = abs(complex(np.trace(rho)) - 1.0)
    min_eigenvalue = float(np.min(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))))
    if (
        hermitian_error > HERMITIAN_TOL
        or trace_error > TRACE_TOL
        or min_eigenvalue < -POSITIVITY_TOL
    ):
        diagnostics = {
            "t": t,
            "hermitian_error": hermitian_error,
            "trace_error": trace_error,
            "min_eigenvalue": min_eigenvalue,
        }
        raise MasterEquationError(f"density matrix invalid at t={t}", diagnostics)


def integrate(
    rho0: np.ndarray,
    params: VSystemParams,
    segments: Sequence[Segment],
    sample_times: Optional[Sequence[float]] = None,
    step: Optional[float] = None,
) -> MasterTrajectory:
    """RK4-integrate through the segments, sampling at sorted sample_times.

    Segment boundaries and sample times are hit exactly; each stretch
    between them uses the largest equal step not exceeding `step`.
    Without sample_times the segment boundaries (and t = 0) are sampled.
    """
    rho = np.array(rho0, dtype=complex)
    check_density(rho, 0.0)
    h_max = default_step(params) if step is None else step
    generators = {flag: liouvillian(params, flag) for flag in (False, True)}

    boundaries = np.cumsum([0.0] + [segment.duration for segment in segments])
    if sample_times is None:
        times = boundaries
    else:
        times = np.asarray(sample_times, dtype=float)
        if np.any(np.diff(times) < 0) or (len(times) and times[0] < 0):
            raise ValueError("sample_times must be sorted and non-negative")
        if len(times) and times[-1] > boundaries[-1] + 1e-12:
            raise RecordMismatchError(
                f"sample time {times[-1]} lies beyond the schedule end {boundaries[-1]}"
            )

    vec = rho.ravel()
    samples = np.empty((len(times), DIM, DIM), dtype=complex)
    clock = 0.0
    i = 0

    def advance(vec, span, generator):
        if span <= 0:
            return vec
        n_steps = max(1, math.ceil(span / h_max))
        propagator = np.linalg.matrix_power(_rk4_map(generator, span / n_steps), n_steps)
        return propagator @ vec

    for segment, end in zip(segments, boundaries[1:]):
        generator = generators[bool(segment.probe_on)]
        while i < len(times) and times[i] <= end:
            vec = advance(vec, times[i] - clock, generator)
            clock = times[i]
            samples[i] = vec.reshape(DIM, DIM)
            check_density(samples[i], clock)
            i += 1
        vec = advance(vec, end - clock, generator)
        clock = end
    while i < len(times):
        # sample times within rounding of the schedule end
        samples[i] = vec.reshape(DIM, DIM)
        i += 1
    logger.debug(f"Integrated master equation over {clock} with step <= {h_max:.3g}")
    return MasterTrajectory(times=np.array(times), rhos=samples)


def steady_state(
    params: VSystemParams, probe_on: bool, levels: Optional[Sequence[int]] = None
) -> np.ndarray:
    """Null-space solution of the master equation, normalized to unit trace.

    levels restricts the solve to an invariant subspace (e.g. (1, 3) when
    omega2 = 0), which is needed when the full steady state is not unique.
    """
    generator = liouvillian(params, probe_on)
    keep = list(range(1, DIM + 1)) if levels is None else sorted(levels)
    index = [(j - 1) * DIM + (k - 1) for j in keep for k in keep]
    kernel = null_space(generator[np.ix_(index, index)])
    if kernel.shape[1] != 1:
        raise ValueError(f"steady state is not unique ({kernel.shape[1]} solutions)")
    size = len(keep)
    block = kernel[:, 0].reshape(size, size)
    block = block / np.trace(block)
    rho = np.zeros((DIM, DIM), dtype=complex)
    rho[np.ix_([j - 1 for j in keep], [k - 1 for k in keep])] = block
    return 0.5 * (rho + rho.conj().T)


def _spectral_radius(superoperator: np.ndarray) -> float:
    values = np.linalg.eigvals(superoperator)
    return float(values[np.argmax(np.abs(values))].real)


def cycle_transition_probs(
    params: VSystemParams, dt: float, pulse_duration: float
) -> TransitionProbs:
    """p and q from the master equation, with no expansion in eps.

    One cycle is a gap exp(L_off dt) followed by a pulse exp(L_on tau). The
    no-emission branch of the pulse is rho -> M rho M^H with
    M = exp(-i H_cond tau); the emission branch is the rest. Deep inside a
    light period the post-pulse state is the positive eigenvector of the
    emission branch applied after the gap, with eigenvalue 1 - p. Likewise q
    is the leading eigenvalue of the no-emission branch after the gap.
    """
    if dt < 0 or not pulse_duration > 0:
        raise ValueError("cycle needs dt >= 0 and pulse_duration > 0")
    gap = expm(liouvillian(params, False) * dt)
    pulse = expm(liouvillian(params, True) * pulse_duration)
    m = expm(-1j * conditional_hamiltonian(params, True) * pulse_duration)
    # row-major vec(M rho M^H) = (M kron conj(M)) vec(rho)
    quiet = np.kron(m, m.conj())
    loud = pulse - quiet
    p = 1.0 - _spectral_radius(loud @ gap)
    q = _spectral_radius(quiet @ gap)
    logger.debug(f"Master-equation cycle at dt={dt}: p={p:.6g}, q={q:.6g}")
    return TransitionProbs(
        p=min(1.0, max(0.0, p)), q=min(1.0, max(0.0, q)), corrected=True
    )


def ensemble_density(states: np.ndarray) -> np.ndarray:
    """Average |psi><psi| over trajectories; states has shape (N, times, 3)."""
    states = np.asarray(states, dtype=complex)
    return np.einsum("nti,ntj->tij", states, states.conj()) / states.shape[0]


class UnravelingReport(BaseModel):
    """Largest elementwise gap between the trajectory average and the master equation."""

    n_trajectories: int
    n_times: int
    max_deviation: float
    bound: float
    within_bound: bool


def compare_unraveling(
    states: np.ndarray,
    master: MasterTrajectory,
    sample_times: Optional[Sequence[float]] = None,
) -> UnravelingReport:
    states = np.asarray(states, dtype=complex)
    if states.ndim != 3 or states.shape[1:] != (len(master.times), DIM):
        raise RecordMismatchError(
            f"trajectory states {states.shape} do not match the master grid "
            f"of {len(master.times)} times"
        )
    if sample_times is not None and not np.allclose(sample_times, master.times):
        raise RecordMismatchError("trajectory and master sample grids differ")
    average = ensemble_density(states)
    deviation = float(np.max(np.abs(average - master.rhos)))
    n = states.shape[0]
    bound = 5.0 / math.sqrt(n)
    logger.info(
        f"Unraveling check: {n} trajectories, max deviation {deviation:.4g} "
        f"(bound {bound:.4g})"
    )
    return UnravelingReport(
        n_trajectories=n,
        n_times=len(master.times),
        max_deviation=deviation,
        bound=bound,
        within_bound=deviation <= bound,
    )
