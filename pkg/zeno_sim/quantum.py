"""
Complex linear algebra for the two- and three-level systems.

States are complex numpy vectors over the fixed basis (|1>, |2>, |3>); the
two-level case embeds with a zero third amplitude. Operators are 3x3 complex
arrays. Units: hbar = 1, Rabi frequencies in rad/time, A3 in 1/time.

The conditional (no-jump) evolution is generated by

    H_cond = (O2/2)(|1><2| + |2><1|) + probe*(O3/2)(|1><3| + |3><1|) - (i/2) A3 |3><3|

and is propagated through a cached eigendecomposition, so the squared norm
(the no-emission probability) costs one small exponential per evaluation.
"""

import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Tuple

import numpy as np
from scipy.linalg import expm
from scipy.optimize import brentq

from zeno_sim.errors import JumpTimeError

logger = logging.getLogger(__name__)

DIM = 3

# Eigenvector matrices conditioned worse than this are treated as defective.
CONDITION_LIMIT = 1e8

# Size of the tabulated survival curve used to bracket jump times.
TABLE_POINTS = 4096

StateVector = np.ndarray
Operator = np.ndarray


def basis(level: int) -> StateVector:
    """Return |level> for level in {1, 2, 3}."""
    if level not in (1, 2, 3):
        raise ValueError(f"level must be 1, 2 or 3, got {level}")
    state = np.zeros(DIM, dtype=complex)
    state[level - 1] = 1.0
    return state


def normalize(state: StateVector) -> StateVector:
    norm = np.linalg.norm(state)
    if norm == 0.0 or not math.isfinite(norm):
        raise ValueError(f"cannot normalize a state with norm {norm}")
    return state / norm


def density(state: StateVector) -> Operator:
    """Projector |state><state| of a normalized state."""
    return np.outer(state, np.conj(state))


@dataclass(frozen=True)
class VSystemParams:
    """Physical constants of the driven V system.

    omega2 drives the 1-2 (rf) transition, omega3 the 1-3 probe transition,
    a3 is the Einstein coefficient of level 3. The Rabi frequencies may be
    zero to switch a field off; a3 must be strictly positive.
    """

    omega2: float
    omega3: float
    a3: float

    def __post_init__(self):
        for name in ("omega2", "omega3"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise ValueError(f"{name} must be finite and >= 0, got {value}")
        if not math.isfinite(self.a3) or self.a3 <= 0:
            raise ValueError(f"a3 must be finite and > 0, got {self.a3}")

    @property
    def eps_p(self) -> float:
        if self.omega3 == 0:
            return math.inf
        return self.omega2 * self.a3 / self.omega3 ** 2

    @property
    def eps_r(self) -> float:
        if self.omega3 == 0:
            return math.inf
        return self.omega2 / self.omega3

    @property
    def eps_a(self) -> float:
        return self.omega2 / self.a3

    @property
    def eps(self) -> float:
        """The bookkeeping parameter max(eps_p, eps_r, eps_a)."""
        return max(self.eps_p, self.eps_r, self.eps_a)

    @property
    def t_pi(self) -> float:
        if self.omega2 == 0:
            return math.inf
        return math.pi / self.omega2


def u_two_level(omega2: float, duration: float) -> Operator:
    """Resonant rf propagator on the 1-2 block, identity on |3>."""
    if duration < 0:
        raise ValueError(f"duration must be >= 0, got {duration}")
    half_angle = 0.5 * omega2 * duration
    u = np.eye(DIM, dtype=complex)
    u[0, 0] = u[1, 1] = math.cos(half_angle)
    u[0, 1] = u[1, 0] = -1j * math.sin(half_angle)
    return u


def rf_hamiltonian(omega2: float) -> Operator:
    """(O2/2)(|1><2| + |2><1|), the two-level drive embedded in three levels."""
    h = np.zeros((DIM, DIM), dtype=complex)
    h[0, 1] = h[1, 0] = 0.5 * omega2
    return h


def conditional_hamiltonian(params: VSystemParams, probe_on: bool) -> Operator:
    h = rf_hamiltonian(params.omega2)
    if probe_on:
        h[0, 2] = h[2, 0] = 0.5 * params.omega3
    h[2, 2] = -0.5j * params.a3
    return h


class Survival:
    """No-emission probability norm^2(t) of a conditionally evolved state.

    For a diagonalizable H_cond = V diag(l) V^-1 with c = V^-1 psi and
    G = V^H V the squared norm is sum_jk conj(c_j) G_jk c_k exp((conj(r_j) + r_k) t)
    with r = -i l, which is evaluated directly.
    """

    def __init__(self, propagator: "NoJumpPropagator", state: StateVector):
        self._propagator = propagator
        self._state = np.asarray(state, dtype=complex)
        if propagator.diagonal:
            coeffs = propagator.inverse @ self._state
            rates = propagator.rates
            self._weights = (
                np.conj(coeffs)[:, None] * propagator.gram * coeffs[None, :]
            ).ravel()
            self._exponents = (np.conj(rates)[:, None] + rates[None, :]).ravel()

    def __call__(self, t: float) -> float:
        if self._propagator.diagonal:
            return float(np.real(self._weights @ np.exp(self._exponents * t)))
        evolved = self._propagator.propagate(self._state, t)
        return float(np.real(np.vdot(evolved, evolved)))

    def values(self, times: np.ndarray) -> np.ndarray:
        times = np.asarray(times, dtype=float)
        if self._propagator.diagonal:
            return np.real(np.exp(np.outer(times, self._exponents)) @ self._weights)
        return np.array([self(t) for t in times])

    def invert(self, r: float, upper: float, lower: float = 0.0) -> float:
        """Time t in [lower, upper] with norm^2(t) = r."""
        xtol = self._propagator.time_tolerance
        try:
            return brentq(lambda t: self(t) - r, lower, upper, xtol=xtol)
        except (ValueError, RuntimeError) as exc:
            raise JumpTimeError(
                f"no jump time for r={r} in [{lower}, {upper}]: {exc}"
            ) from exc


class TabulatedSurvival(Survival):
    """Survival curve with a precomputed table to bracket jump times."""

    def __init__(self, propagator: "NoJumpPropagator", state: StateVector, step: float):
        super().__init__(propagator, state)
        self._grid = step * np.arange(TABLE_POINTS)
        # running minimum keeps the table sortable despite rounding noise
        self._table = np.minimum.accumulate(self.values(self._grid))

    def invert(self, r: float, upper: float, lower: float = 0.0) -> float:
        index = int(np.searchsorted(-self._table, -r))
        if index == 0:
            return super().invert(r, upper, lower)
        low = self._grid[index - 1]
        high = self._grid[index] if index < TABLE_POINTS else upper
        if low >= upper:
            return super().invert(r, upper, lower)
        try:
            return super().invert(r, min(high, upper), low)
        except JumpTimeError:
            return super().invert(r, upper, lower)


class NoJumpPropagator:
    """exp(-i H_cond t) for a fixed conditional Hamiltonian."""

    def __init__(self, h_cond: Operator):
        h = np.asarray(h_cond, dtype=complex)
        if h.ndim != 2 or h.shape[0] != h.shape[1]:
            raise ValueError(f"h_cond must be square, got shape {h.shape}")
        if not np.all(np.isfinite(h)):
            raise ValueError("h_cond has non-finite entries")
        self.h = h
        eigvals, eigvecs = np.linalg.eig(h)
        condition = np.linalg.cond(eigvecs)
        self.diagonal = bool(condition < CONDITION_LIMIT)
        scale = max(float(np.max(np.abs(eigvals))), 1e-12)
        self.time_tolerance = 1e-10 / scale
        self._table_step = 0.25 / scale
        self._reset_survival: Optional[TabulatedSurvival] = None
        if self.diagonal:
            self.rates = -1j * eigvals
            self.vectors = eigvecs
            self.inverse = np.linalg.inv(eigvecs)
            self.gram = eigvecs.conj().T @ eigvecs
        else:
            logger.debug(
                f"Near-defective H_cond (cond={condition:.3g}); using expm fallback"
            )

    def matrix(self, t: float) -> Operator:
        if t < 0:
            raise ValueError(f"duration must be >= 0, got {t}")
        if self.diagonal:
            return (self.vectors * np.exp(self.rates * t)) @ self.inverse
        return expm(-1j * self.h * t)

    def propagate(self, state: StateVector, t: float) -> StateVector:
        if t < 0:
            raise ValueError(f"duration must be >= 0, got {t}")
        if self.diagonal:
            return self.vectors @ (np.exp(self.rates * t) * (self.inverse @ state))
        return expm(-1j * self.h * t) @ state

    def survival(self, state: StateVector) -> Survival:
        return Survival(self, state)

    @property
    def reset_survival(self) -> TabulatedSurvival:
        """Survival curve of the post-jump state |1>, built on first use."""
        if self._reset_survival is None:
            self._reset_survival = TabulatedSurvival(self, basis(1), self._table_step)
        return self._reset_survival


@lru_cache(maxsize=64)
def no_jump_propagator(params: VSystemParams, probe_on: bool) -> NoJumpPropagator:
    return NoJumpPropagator(conditional_hamiltonian(params, probe_on))


def conditional_propagate(
    state: StateVector, h_cond: Operator, duration: float
) -> StateVector:
    """Unnormalized exp(-i H_cond t) state; its squared norm is the no-emission probability."""
    return NoJumpPropagator(h_cond).propagate(np.asarray(state, dtype=complex), duration)


def split_hermitian(operator: Operator) -> Tuple[Operator, Operator]:
    """Return (H, K) with operator = H + iK, both Hermitian."""
    hermitian = 0.5 * (operator + operator.conj().T)
    anti = 0.5 * (operator - operator.conj().T)
    return hermitian, -1j * anti
