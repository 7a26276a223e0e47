"""
Run configuration.

A single JSON document validated by pydantic; CLI flags override values
from the file. All physical quantities are in the hbar = 1 unit system,
with omega2 = 1 as the recommended time unit.
"""

import json
import logging
import math
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Optional

from pydantic import BaseModel, ValidationError, validator

from zeno_sim.errors import ConfigError
from zeno_sim.models import PulseSchedule
from zeno_sim.quantum import VSystemParams

logger = logging.getLogger(__name__)

MAX_SEED = 2 ** 64 - 1


class Mode(str, Enum):
    IDEAL = "ideal"
    PULSED = "pulsed"
    CONTINUOUS = "continuous"
    THEORY = "theory"
    VERIFY = "verify"


class RunConfig(BaseModel):
    mode: Mode = Mode.THEORY
    omega2: float = 1.0
    omega3: float = 40.0
    a3: float = 20.0
    pulse_duration: float = 1.0
    gap: float = 1.0
    # when set, gap = T_pi / gap_in_t_pi (e.g. 2 for the T_pi/2 spacing)
    gap_in_t_pi: Optional[float] = None
    n_pulses: int = 4000
    total_duration: Optional[float] = None
    seed: int = 0
    trajectories: int = 1
    workers: int = 1
    gap_threshold: Optional[float] = None
    out: Path = Path("out")
    record_path: Optional[Path] = None

    class Config:
        extra = "forbid"
        schema_extra = {
            "example": {
                "mode": "pulsed",
                "omega2": 1.0,
                "omega3": 40.0,
                "a3": 20.0,
                "pulse_duration": 1.0,
                "gap": 1.0,
                "n_pulses": 5000,
                "seed": 7,
                "trajectories": 4,
                "workers": 4,
                "out": "out/pulsed",
            }
        }

    @validator("omega2", "omega3", "pulse_duration", "gap")
    def non_negative(cls, value, field):
        if not math.isfinite(value) or value < 0:
            raise ValueError(f"{field.name} must be finite and >= 0")
        return value

    @validator("a3")
    def positive_decay(cls, value):
        if not math.isfinite(value) or value <= 0:
            raise ValueError("a3 must be finite and > 0")
        return value

    @validator("gap_in_t_pi", "total_duration", "gap_threshold")
    def positive_if_set(cls, value, field):
        if value is not None and not (math.isfinite(value) and value > 0):
            raise ValueError(f"{field.name} must be > 0 when given")
        return value

    @validator("n_pulses", "trajectories", "workers")
    def at_least_one(cls, value, field):
        if value < 1:
            raise ValueError(f"{field.name} must be >= 1")
        return value

    @validator("seed")
    def unsigned_64(cls, value):
        if not 0 <= value <= MAX_SEED:
            raise ValueError("seed must fit in an unsigned 64-bit integer")
        return value

    @property
    def params(self) -> VSystemParams:
        return VSystemParams(omega2=self.omega2, omega3=self.omega3, a3=self.a3)

    @property
    def t_pi(self) -> float:
        return self.params.t_pi

    @property
    def effective_gap(self) -> float:
        if self.gap_in_t_pi is not None:
            return self.t_pi / self.gap_in_t_pi
        return self.gap

    def schedule(self) -> PulseSchedule:
        if self.mode is Mode.CONTINUOUS or self.effective_gap == 0:
            if self.total_duration is None:
                raise ConfigError("continuous driving needs total_duration")
            return PulseSchedule.continuous_drive(self.total_duration)
        if self.pulse_duration == 0:
            raise ConfigError("pulsed driving needs pulse_duration > 0")
        if self.total_duration is not None:
            return PulseSchedule(
                self.pulse_duration, self.effective_gap, total_duration=self.total_duration
            )
        return PulseSchedule(self.pulse_duration, self.effective_gap, n_pulses=self.n_pulses)


def load_config(path: Optional[Path], overrides: Dict[str, Any]) -> RunConfig:
    """Read the JSON config (if any) and apply non-None overrides."""
    data: Dict[str, Any] = {}
    if path is not None:
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path} is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"{path} must contain a JSON object")
    data.update({key: value for key, value in overrides.items() if value is not None})
    try:
        config = RunConfig.parse_obj(data)
    except ValidationError as exc:
        raise ConfigError(str(exc)) from exc
    logger.info(
        f"Mode {config.mode.value}: omega2={config.omega2}, omega3={config.omega3}, "
        f"a3={config.a3}, T_pi={config.t_pi:.6g}"
    )
    return config
