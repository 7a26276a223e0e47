"""
Closed-form light/dark period theory for the pulsed V system.

All formulas keep their first-order terms in the small parameters
eps_p, eps_r, eps_a and drop second-order remainders. Probabilities are
clamped to [0, 1] after evaluation; TransitionProbs.clamped records when
that happened, which signals a parameter set outside the small-eps regime.
"""

import logging
import math

from zeno_sim.errors import DivergentPeriodError
from zeno_sim.jumps import photon_rate
from zeno_sim.models import PeriodTheory, TransitionProbs
from zeno_sim.quantum import VSystemParams

logger = logging.getLogger(__name__)

PULSED = "pulsed"
CONTINUOUS_LIMIT = "continuous-limit"
SMALL_GAP = "small-gap"


def _clamp(value: float):
    clamped = min(1.0, max(0.0, value))
    return clamped, clamped != value


def _saturation(params: VSystemParams) -> float:
    """A3^2 + 2 O3^2, the denominator shared by the probe-saturation terms."""
    return params.a3 ** 2 + 2 * params.omega3 ** 2


def _clamped_probs(p: float, q: float, corrected: bool) -> TransitionProbs:
    p_clamped, p_fired = _clamp(p)
    q_clamped, q_fired = _clamp(q)
    if p_fired or q_fired:
        logger.warning(
            f"Transition probabilities clamped (p={p:.6g}, q={q:.6g}); "
            "parameters are outside the small-eps regime"
        )
    return TransitionProbs(
        p=p_clamped, q=q_clamped, corrected=corrected, clamped=p_fired or q_fired
    )


def _raw_pq(params: VSystemParams, dt: float, pulse_duration: float):
    c = math.cos(params.omega2 * dt)
    s = math.sin(params.omega2 * dt)
    a2 = params.a3 ** 2
    o2 = params.omega3 ** 2
    sat = _saturation(params)
    pulse_angle = params.omega2 * pulse_duration

    p = (
        0.5 * (1 - c)
        + params.eps_p
        * (
            2 * s * (a2 + o2) / sat
            + 0.5 * pulse_angle * c * (3 * a2 + 2 * o2) / sat
            - 0.5 * pulse_angle
        )
        - 0.5 * params.eps_a * s * o2 / sat
    )
    q = 0.5 * (1 + c) - params.eps_p * (2 * s + 0.5 * pulse_angle * (1 + c))
    return p, q


def pq(params: VSystemParams, dt: float, pulse_duration: float) -> TransitionProbs:
    """p (yes -> no) and q (no -> no) when the |3> population has decayed between pulses."""
    p, q = _raw_pq(params, dt, pulse_duration)
    return _clamped_probs(p, q, corrected=False)


def pq_corrected(
    params: VSystemParams, dt: float, pulse_duration: float
) -> TransitionProbs:
    """p~ and q~, valid for any gap including incomplete decay of level 3."""
    p, q = _raw_pq(params, dt, pulse_duration)
    s = math.sin(params.omega2 * dt)
    p -= (
        2
        * params.eps_r
        * s
        * params.omega3
        * params.a3
        / _saturation(params)
        * math.exp(-0.5 * params.a3 * dt)
    )
    return _clamped_probs(p, q, corrected=True)


def pq_continuous_limit(params: VSystemParams, pulse_duration: float) -> TransitionProbs:
    """dt -> 0 limits of p~ and q~."""
    pumped = params.eps_p * params.omega2 * pulse_duration
    return _clamped_probs(
        pumped * params.a3 ** 2 / _saturation(params), 1.0 - pumped, corrected=True
    )


def mean_periods(
    probs: TransitionProbs, dt: float, pulse_duration: float
) -> PeriodTheory:
    """T_L = cycle / p, T_D = cycle / (1 - q) from the geometric period laws."""
    if probs.p <= 0:
        raise DivergentPeriodError("p = 0: light periods never end")
    if probs.q >= 1:
        raise DivergentPeriodError("q = 1: dark periods never end")
    cycle = pulse_duration + dt
    return PeriodTheory(
        t_light=cycle / probs.p, t_dark=cycle / (1.0 - probs.q), regime=PULSED
    )


def continuous_limit_periods(params: VSystemParams) -> PeriodTheory:
    """Electron-shelving light and dark durations under continuous driving."""
    if params.omega2 == 0:
        raise DivergentPeriodError("omega2 = 0: the shelving level is never reached")
    o2 = params.omega3 ** 2
    t_dark = o2 / (params.omega2 ** 2 * params.a3)
    t_light = _saturation(params) * o2 / (params.omega2 ** 2 * params.a3 ** 3)
    return PeriodTheory(t_light=t_light, t_dark=t_dark, regime=CONTINUOUS_LIMIT)


def small_gap_periods(omega2: float, dt: float, pulse_duration: float) -> PeriodTheory:
    """T_L ~ T_D ~ (cycle / dt) * 4 / (O2^2 dt), valid for A3^-1 << dt << 1/O2."""
    if not dt > 0 or omega2 == 0:
        raise DivergentPeriodError("small-gap estimate needs dt > 0 and omega2 > 0")
    value = (pulse_duration + dt) / dt * 4.0 / (omega2 ** 2 * dt)
    return PeriodTheory(t_light=value, t_dark=value, regime=SMALL_GAP)


def light_period_series(p: float, cycle: float, terms: int = 200) -> float:
    """Truncated sum over n of cycle * n * (1 - p)^(n-1) * p."""
    return sum(cycle * n * (1 - p) ** (n - 1) * p for n in range(1, terms + 1))


def dark_period_series(q: float, cycle: float, terms: int = 200) -> float:
    """Truncated sum over n of cycle * n * q^(n-1) * (1 - q)."""
    return light_period_series(1.0 - q, cycle, terms)


def default_gap_threshold(params: VSystemParams) -> float:
    """Ten mean photon spacings of a saturated burst: 10 (A3^2 + 2 O3^2) / (A3 O3^2)."""
    if params.omega3 == 0:
        raise ValueError("no photon bursts without the probe field (omega3 = 0)")
    return 10.0 * _saturation(params) / (params.a3 * params.omega3 ** 2)


def misclassification_bound(params: VSystemParams, gap_threshold: float) -> float:
    """Expected spurious dark periods per light period under continuous driving.

    (photons per light period) * exp(-gap_threshold * burst rate), treating
    intra-burst spacings as exponential.
    """
    if not gap_threshold > 0:
        raise ValueError("gap_threshold must be > 0")
    if params.omega3 == 0:
        raise ValueError("no photon bursts without the probe field (omega3 = 0)")
    rate = photon_rate(params)
    photons = continuous_limit_periods(params).t_light * rate
    return photons * math.exp(-gap_threshold * rate)
