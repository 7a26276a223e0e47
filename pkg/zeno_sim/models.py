from dataclasses import dataclass, field
from enum import Enum
from typing import List, NamedTuple, Optional

import numpy as np

from zeno_sim.quantum import StateVector, VSystemParams


class Outcome(str, Enum):
    """Result of an ideal measurement of |1><1|: A (found in |1>) or PERP."""

    A = "A"
    PERP = "PERP"


class PeriodKind(str, Enum):
    LIGHT = "LIGHT"
    DARK = "DARK"


class Segment(NamedTuple):
    """A stretch of constant driving: the rf field is always on, the probe optionally."""

    duration: float
    probe_on: bool


@dataclass
class OutcomeSequence:
    outcomes: List[Outcome]
    dt: float

    def __post_init__(self):
        if len(self.outcomes) < 1:
            raise ValueError("an outcome sequence needs at least one outcome")
        if not self.dt > 0:
            raise ValueError(f"measurement spacing must be > 0, got {self.dt}")

    def as_flags(self) -> np.ndarray:
        """Boolean array, True where the outcome is A."""
        return np.array([o is Outcome.A for o in self.outcomes], dtype=bool)


@dataclass
class IdealPeriodStats:
    mean_a: float
    mean_perp: float
    count_a: int
    count_perp: int
    se_a: float
    se_perp: float


@dataclass(frozen=True)
class PulseSchedule:
    """Probe pulses of length pulse_duration separated by gaps of length gap.

    gap == 0 selects continuous driving, where pulse_duration is ignored and
    total_duration sets the run length. Pulse k occupies
    [k*cycle, k*cycle + pulse_duration).
    """

    pulse_duration: float
    gap: float
    n_pulses: Optional[int] = None
    total_duration: Optional[float] = None

    def __post_init__(self):
        if self.gap < 0:
            raise ValueError(f"gap must be >= 0, got {self.gap}")
        if self.continuous:
            if self.total_duration is None or not self.total_duration > 0:
                raise ValueError("continuous mode needs total_duration > 0")
            return
        if not self.pulse_duration > 0:
            raise ValueError(f"pulse_duration must be > 0, got {self.pulse_duration}")
        if self.n_pulses is None and self.total_duration is None:
            raise ValueError("pulsed mode needs n_pulses or total_duration")
        if self.n_pulses is not None and self.n_pulses < 1:
            raise ValueError(f"n_pulses must be >= 1, got {self.n_pulses}")

    @classmethod
    def continuous_drive(cls, total_duration: float) -> "PulseSchedule":
        return cls(pulse_duration=0.0, gap=0.0, total_duration=total_duration)

    @property
    def continuous(self) -> bool:
        return self.gap == 0

    @property
    def cycle(self) -> float:
        return self.pulse_duration + self.gap

    @property
    def pulse_count(self) -> int:
        if self.n_pulses is not None:
            return self.n_pulses
        return int(self.total_duration // self.cycle)

    @property
    def duration(self) -> float:
        if self.continuous:
            return float(self.total_duration)
        return self.pulse_count * self.cycle

    def pulse_start(self, k: int) -> float:
        return k * self.cycle


@dataclass
class EmissionRecord:
    """Photon emission times of one trajectory.

    pulse_index[i] is the pulse the i-th jump belongs to (jumps in a gap
    belong to the preceding pulse), or None under continuous driving.
    """

    jump_times: List[float]
    pulse_index: List[Optional[int]]
    params: VSystemParams
    schedule: PulseSchedule
    seed: Optional[int] = None
    trajectory: int = 0

    def __post_init__(self):
        if len(self.jump_times) != len(self.pulse_index):
            raise ValueError("jump_times and pulse_index differ in length")
        if any(b <= a for a, b in zip(self.jump_times, self.jump_times[1:])):
            raise ValueError("jump times must be strictly increasing")

    @property
    def photon_count(self) -> int:
        return len(self.jump_times)

    @property
    def duration(self) -> float:
        return self.schedule.duration


@dataclass
class PulseOutcome:
    photon_count: int
    post_state: StateVector
    jump_times: List[float] = field(default_factory=list)

    @property
    def fluoresced(self) -> bool:
        return self.photon_count >= 1


@dataclass(frozen=True)
class TransitionProbs:
    """p: fluorescence -> none, q: none -> none, per probe pulse."""

    p: float
    q: float
    corrected: bool = False
    clamped: bool = False


@dataclass(frozen=True)
class PeriodTheory:
    t_light: float
    t_dark: float
    regime: str


@dataclass(frozen=True)
class PeriodSample:
    kind: PeriodKind
    duration: float
    pulse_count: Optional[int] = None
    censored: bool = False

    def __post_init__(self):
        if not self.duration > 0:
            raise ValueError(f"period duration must be > 0, got {self.duration}")
        if self.pulse_count is not None and self.pulse_count < 1:
            raise ValueError(f"pulse_count must be >= 1, got {self.pulse_count}")


@dataclass
class MasterTrajectory:
    """Density matrices rhos[i] of the master equation at times[i]."""

    times: np.ndarray
    rhos: np.ndarray
