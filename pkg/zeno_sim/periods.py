"""
Light and dark periods from emission records.

Pulsed records are reduced to one LIGHT/DARK flag per pulse and maximal
runs of equal flags become periods of pulse_count * (pulse + gap). Under
continuous driving, inter-photon gaps longer than gap_threshold separate
photon bursts (LIGHT) from dark periods. The first and last period of a
record are censored: their true boundaries lie outside the record.
"""

import logging
import math
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel
from scipy import stats

from zeno_sim.errors import InsufficientDataError, RecordMismatchError
from zeno_sim.models import (
    EmissionRecord,
    OutcomeSequence,
    PeriodKind,
    PeriodSample,
    PeriodTheory,
    PulseSchedule,
)

logger = logging.getLogger(__name__)

CENSORING = "first-and-last-dropped"
MIN_PERIODS = 3
MIN_SAMPLES = 30
# pool geometric histogram bins until each expects at least this many counts
MIN_EXPECTED = 5.0
# relative differences this small are floating-point noise
ROUNDOFF = 64 * np.finfo(float).eps

PeriodSource = Union[EmissionRecord, OutcomeSequence, Sequence[bool], np.ndarray]


def run_lengths(flags: Sequence[bool]) -> Tuple[np.ndarray, np.ndarray]:
    """Values and lengths of the maximal runs of equal flags."""
    flags = np.asarray(flags, dtype=bool)
    if flags.size == 0:
        return flags, np.zeros(0, dtype=int)
    change = np.flatnonzero(flags[1:] != flags[:-1]) + 1
    starts = np.concatenate(([0], change))
    ends = np.concatenate((change, [flags.size]))
    return flags[starts], ends - starts


def classify_pulses(record: EmissionRecord, schedule: PulseSchedule) -> np.ndarray:
    """True for every pulse with at least one attributed photon."""
    if schedule.continuous or record.schedule != schedule:
        raise RecordMismatchError("record was not produced with this pulsed schedule")
    flags = np.zeros(schedule.pulse_count, dtype=bool)
    for index in record.pulse_index:
        if index is None or not 0 <= index < schedule.pulse_count:
            raise RecordMismatchError(f"pulse index {index} outside the schedule")
        flags[index] = True
    return flags


def pulse_outcome_sequence(flags: Sequence[bool]) -> List[PeriodKind]:
    return [PeriodKind.LIGHT if flag else PeriodKind.DARK for flag in flags]


def _flag_periods(flags: np.ndarray, cycle: float) -> List[PeriodSample]:
    values, lengths = run_lengths(flags)
    last = len(values) - 1
    return [
        PeriodSample(
            kind=PeriodKind.LIGHT if value else PeriodKind.DARK,
            duration=int(length) * cycle,
            pulse_count=int(length),
            censored=i in (0, last),
        )
        for i, (value, length) in enumerate(zip(values, lengths))
    ]


def _burst_periods(
    times: np.ndarray, duration: float, gap_threshold: float
) -> List[PeriodSample]:
    if times.size == 0:
        return [PeriodSample(PeriodKind.DARK, duration, censored=True)]
    breaks = np.flatnonzero(np.diff(times) > gap_threshold)
    burst_starts = np.concatenate(([times[0]], times[breaks + 1]))
    burst_ends = np.concatenate((times[breaks], [times[-1]]))

    bounds = []
    if times[0] > gap_threshold:
        bounds.append((PeriodKind.DARK, 0.0, times[0]))
    else:
        burst_starts[0] = 0.0
    tail_dark = duration - times[-1] > gap_threshold
    if not tail_dark:
        burst_ends[-1] = duration
    for j, (start, end) in enumerate(zip(burst_starts, burst_ends)):
        bounds.append((PeriodKind.LIGHT, start, end))
        if j + 1 < len(burst_starts):
            bounds.append((PeriodKind.DARK, end, burst_starts[j + 1]))
    if tail_dark:
        bounds.append((PeriodKind.DARK, times[-1], duration))

    # a lone photon has no measurable burst; the dark stretch runs through it
    merged = []
    for kind, start, end in bounds:
        if not end > start:
            continue
        if merged and merged[-1][0] is kind:
            merged[-1] = (kind, merged[-1][1], end)
        else:
            merged.append((kind, start, end))
    if not merged:
        return [PeriodSample(PeriodKind.DARK, duration, censored=True)]

    last = len(merged) - 1
    return [
        PeriodSample(kind, float(end - start), censored=i in (0, last))
        for i, (kind, start, end) in enumerate(merged)
    ]


def segment_periods(
    source: PeriodSource,
    schedule: Optional[PulseSchedule] = None,
    gap_threshold: Optional[float] = None,
) -> List[PeriodSample]:
    """All periods in order, censored ends included and flagged."""
    if isinstance(source, OutcomeSequence):
        return _flag_periods(source.as_flags(), source.dt)
    if schedule is None:
        raise ValueError("a schedule is needed to interpret pulse flags or records")
    if isinstance(source, EmissionRecord) and schedule.continuous:
        if gap_threshold is None or not gap_threshold > 0:
            raise ValueError("continuous records need gap_threshold > 0")
        if source.schedule != schedule:
            raise RecordMismatchError("record was not produced with this schedule")
        return _burst_periods(
            np.asarray(source.jump_times, dtype=float), source.duration, gap_threshold
        )
    if isinstance(source, EmissionRecord):
        flags = classify_pulses(source, schedule)
    else:
        flags = np.asarray(source, dtype=bool)
    return _flag_periods(flags, schedule.cycle)


def extract_periods(
    source: PeriodSource,
    schedule: Optional[PulseSchedule] = None,
    gap_threshold: Optional[float] = None,
) -> List[PeriodSample]:
    """Complete (uncensored) periods, strictly alternating LIGHT and DARK."""
    periods = segment_periods(source, schedule, gap_threshold)
    if len(periods) < MIN_PERIODS:
        raise InsufficientDataError(
            f"{len(periods)} periods found, at least {MIN_PERIODS} needed"
        )
    return [period for period in periods if not period.censored]


class GeometricFit(BaseModel):
    """Maximum-likelihood geometric law on {1, 2, ...} for pulses per period."""

    parameter: float
    stderr: float
    mean_count: float
    chi2: Optional[float] = None
    dof: Optional[int] = None
    p_value: Optional[float] = None


def geometric_fit(counts: Sequence[int]) -> GeometricFit:
    counts = np.asarray(counts, dtype=int)
    if counts.size == 0 or np.any(counts < 1):
        raise ValueError("geometric fit needs positive pulse counts")
    n = counts.size
    mean_count = float(counts.mean())
    parameter = 1.0 / mean_count
    stderr = parameter * math.sqrt((1.0 - parameter) / n)

    observed, expected = [], []
    k = 1
    while True:
        bin_expected = n * (1 - parameter) ** (k - 1) * parameter
        tail_expected = n * (1 - parameter) ** k
        if bin_expected < MIN_EXPECTED or tail_expected < MIN_EXPECTED:
            observed.append(int(np.sum(counts >= k)))
            expected.append(n * (1 - parameter) ** (k - 1))
            break
        observed.append(int(np.sum(counts == k)))
        expected.append(bin_expected)
        k += 1
    if len(observed) > 1 and expected[-1] < MIN_EXPECTED:
        tail_observed, tail_expected = observed.pop(), expected.pop()
        observed[-1] += tail_observed
        expected[-1] += tail_expected

    fit = GeometricFit(parameter=parameter, stderr=stderr, mean_count=mean_count)
    # one parameter estimated from the data
    if len(observed) >= 3:
        result = stats.chisquare(observed, expected, ddof=1)
        fit.chi2 = float(result.statistic)
        fit.dof = len(observed) - 2
        fit.p_value = float(result.pvalue)
    return fit


class PeriodReport(BaseModel):
    """Measured mean light/dark durations against a theory prediction."""

    mean_light: float
    mean_dark: float
    se_light: float
    se_dark: float
    n_light: int
    n_dark: int
    theory_light: float
    theory_dark: float
    regime: str
    # None when the standard error vanishes but the mean misses the theory
    z_light: Optional[float]
    z_dark: Optional[float]
    rel_delta_light: float
    rel_delta_dark: float
    light_fit: Optional[GeometricFit] = None
    dark_fit: Optional[GeometricFit] = None
    censoring: str = CENSORING
    gap_threshold: Optional[float] = None
    misclassification_bound: Optional[float] = None

    class Config:
        schema_extra = {
            "example": {
                "mean_light": 8.61,
                "mean_dark": 7.74,
                "se_light": 0.3,
                "se_dark": 0.27,
                "n_light": 520,
                "n_dark": 519,
                "theory_light": 8.69,
                "theory_dark": 7.68,
                "regime": "pulsed",
                "z_light": -0.27,
                "z_dark": 0.22,
                "rel_delta_light": -0.009,
                "rel_delta_dark": 0.008,
                "censoring": CENSORING,
            }
        }


def mean_and_se(durations: Sequence[float]) -> Tuple[float, float]:
    """Sample mean and its standard error.

    Equal durations give exactly (duration, 0.0).
    """
    durations = np.asarray(durations, dtype=float)
    if durations.size == 0:
        raise ValueError("no durations to summarize")
    first = float(durations[0])
    if durations.size == 1 or np.ptp(durations) == 0:
        return first, 0.0
    mean = first + float(np.mean(durations - first))
    se = float(durations.std(ddof=1) / math.sqrt(durations.size))
    if se <= ROUNDOFF * abs(mean):
        se = 0.0
    return mean, se


def z_score(value: float, reference: float, se: float) -> Optional[float]:
    """(value - reference) / se, or None when se is zero but the two differ."""
    delta = value - reference
    if abs(delta) <= ROUNDOFF * max(abs(value), abs(reference)):
        return 0.0
    if se > 0:
        return delta / se
    return None


def report(
    samples: Sequence[PeriodSample],
    theory: PeriodTheory,
    gap_threshold: Optional[float] = None,
    min_samples: int = MIN_SAMPLES,
) -> PeriodReport:
    light = [s for s in samples if s.kind is PeriodKind.LIGHT]
    dark = [s for s in samples if s.kind is PeriodKind.DARK]
    if len(light) < min_samples or len(dark) < min_samples:
        raise InsufficientDataError(
            f"{len(light)} light and {len(dark)} dark periods, "
            f"at least {min_samples} of each needed"
        )
    mean_light, se_light = mean_and_se([s.duration for s in light])
    mean_dark, se_dark = mean_and_se([s.duration for s in dark])

    light_fit = dark_fit = None
    if all(s.pulse_count is not None for s in samples):
        light_fit = geometric_fit([s.pulse_count for s in light])
        dark_fit = geometric_fit([s.pulse_count for s in dark])

    logger.info(
        f"Light periods: {len(light)}, mean {mean_light:.4g} +- {se_light:.2g} "
        f"(theory {theory.t_light:.4g}); dark periods: {len(dark)}, "
        f"mean {mean_dark:.4g} +- {se_dark:.2g} (theory {theory.t_dark:.4g})"
    )
    return PeriodReport(
        mean_light=mean_light,
        mean_dark=mean_dark,
        se_light=se_light,
        se_dark=se_dark,
        n_light=len(light),
        n_dark=len(dark),
        theory_light=theory.t_light,
        theory_dark=theory.t_dark,
        regime=theory.regime,
        z_light=z_score(mean_light, theory.t_light, se_light),
        z_dark=z_score(mean_dark, theory.t_dark, se_dark),
        rel_delta_light=(mean_light - theory.t_light) / theory.t_light,
        rel_delta_dark=(mean_dark - theory.t_dark) / theory.t_dark,
        light_fit=light_fit,
        dark_fit=dark_fit,
        gap_threshold=gap_threshold,
    )
