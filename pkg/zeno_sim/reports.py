"""JSON summaries written by the ideal and theory commands."""

from typing import Optional

from pydantic import BaseModel

from zeno_sim.jumps import ValidityReport


class IdealReport(BaseModel):
    """Mean A (T1) and PERP (T2) period durations against dt / sin^2(O2 dt / 2)."""

    omega2: float
    dt: float
    t_pi: float
    n_measurements: int
    mean_a: float
    se_a: float
    count_a: int
    mean_perp: float
    se_perp: float
    count_perp: int
    theory: float
    z_a: Optional[float]
    z_perp: Optional[float]
    # T1 against T2
    z_between: Optional[float]

    class Config:
        schema_extra = {
            "example": {
                "omega2": 1.0,
                "dt": 1.5708,
                "t_pi": 3.1416,
                "n_measurements": 1000000,
                "mean_a": 3.141,
                "se_a": 0.004,
                "count_a": 249800,
                "mean_perp": 3.143,
                "se_perp": 0.004,
                "count_perp": 249801,
                "theory": 3.1416,
                "z_a": -0.15,
                "z_perp": 0.35,
                "z_between": -0.35,
            }
        }


class TheoryReport(BaseModel):
    omega2: float
    omega3: float
    a3: float
    pulse_duration: float
    gap: float
    t_pi: float
    eps_p: float
    eps_r: float
    eps_a: float
    validity: Optional[ValidityReport] = None
    p: float
    q: float
    p_corrected: float
    q_corrected: float
    clamped: bool
    t_light: Optional[float] = None
    t_dark: Optional[float] = None
    small_gap_estimate: Optional[float] = None
    continuous_t_light: Optional[float] = None
    continuous_t_dark: Optional[float] = None
    gap_threshold: Optional[float] = None

    class Config:
        schema_extra = {
            "example": {
                "omega2": 1.0,
                "omega3": 40.0,
                "a3": 20.0,
                "pulse_duration": 1.0,
                "gap": 1.0,
                "t_pi": 3.1416,
                "eps_p": 0.0125,
                "eps_r": 0.025,
                "eps_a": 0.05,
                "p": 0.2301,
                "q": 0.7395,
                "p_corrected": 0.2301,
                "q_corrected": 0.7395,
                "clamped": False,
                "t_light": 8.693,
                "t_dark": 7.677,
                "small_gap_estimate": 8.0,
                "continuous_t_light": 720.0,
                "continuous_t_dark": 80.0,
                "gap_threshold": 1.125,
            }
        }
