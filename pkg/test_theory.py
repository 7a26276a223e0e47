"""
Tests for the closed-form period theory.

Test coverage includes:
- Transition probabilities p, q at the reference parameter set.
- Reduction to the ideal two-level result as the small parameters vanish.
- The dt -> 0 limit of the corrected probabilities and the electron-shelving periods.
- Probability clamping, divergent periods and the small-gap estimate.
- The gap threshold and its bound on spurious dark periods.
- The pulsed-to-continuous crossover: mean periods saturate instead of freezing.
"""

import logging
import math

import pytest

from zeno_sim.errors import DivergentPeriodError
from zeno_sim.models import TransitionProbs
from zeno_sim.quantum import VSystemParams
from zeno_sim.theory import (
    CONTINUOUS_LIMIT,
    PULSED,
    continuous_limit_periods,
    dark_period_series,
    default_gap_threshold,
    light_period_series,
    mean_periods,
    misclassification_bound,
    pq,
    pq_continuous_limit,
    pq_corrected,
    small_gap_periods,
)

PARAMS = VSystemParams(omega2=1.0, omega3=40.0, a3=20.0)


def test_reference_transition_probabilities():
    probs = pq(PARAMS, 1.0, 1.0)
    assert probs.p == pytest.approx(0.23006, abs=2e-5)
    assert probs.q == pytest.approx(0.73949, abs=2e-5)
    assert not probs.clamped
    assert not probs.corrected


def test_reference_mean_periods():
    theory = mean_periods(pq_corrected(PARAMS, 1.0, 1.0), 1.0, 1.0)
    assert theory.t_light == pytest.approx(8.693, abs=2e-3)
    assert theory.t_dark == pytest.approx(7.677, abs=2e-3)
    assert theory.regime == PULSED


def test_correction_vanishes_for_long_gaps():
    plain = pq(PARAMS, 2.0, 1.0)
    corrected = pq_corrected(PARAMS, 2.0, 1.0)
    assert corrected.corrected
    assert corrected.p == pytest.approx(plain.p, abs=1e-8)
    assert corrected.q == plain.q


@pytest.mark.parametrize("dt", [0.3, 1.0, 2.0, 3.0])
def test_small_parameters_reduce_to_two_level_result(dt):
    tiny = VSystemParams(omega2=1.0, omega3=1e9, a3=1e6)
    probs = pq(tiny, dt, 1e-3)
    assert probs.p == pytest.approx(0.5 * (1 - math.cos(dt)), abs=1e-5)
    assert probs.q == pytest.approx(0.5 * (1 + math.cos(dt)), abs=1e-5)


def test_continuous_limit_periods():
    theory = continuous_limit_periods(PARAMS)
    assert theory.t_light == pytest.approx(720.0)
    assert theory.t_dark == pytest.approx(80.0)
    assert theory.regime == CONTINUOUS_LIMIT


@pytest.mark.parametrize("pulse", [0.25, 1.0, 3.0])
def test_zero_gap_limit_is_electron_shelving(pulse):
    corrected = pq_corrected(PARAMS, 0.0, pulse)
    limit = pq_continuous_limit(PARAMS, pulse)
    assert corrected.p == pytest.approx(limit.p, abs=1e-14)
    assert corrected.q == pytest.approx(limit.q, abs=1e-14)
    periods = mean_periods(corrected, 0.0, pulse)
    shelving = continuous_limit_periods(PARAMS)
    assert periods.t_light == pytest.approx(shelving.t_light, rel=1e-10)
    assert periods.t_dark == pytest.approx(shelving.t_dark, rel=1e-10)


def test_continuous_limit_probabilities():
    limit = pq_continuous_limit(PARAMS, 1.0)
    assert limit.p == pytest.approx(0.0125 * 400 / 3600)
    assert limit.q == pytest.approx(1 - 0.0125)


def test_clamping_is_flagged(caplog):
    strong = VSystemParams(omega2=1.0, omega3=1.0, a3=20.0)
    with caplog.at_level(logging.WARNING):
        probs = pq_continuous_limit(strong, 1.0)
    assert probs.clamped
    assert 0.0 <= probs.p <= 1.0
    assert probs.q == 0.0
    assert "clamped" in caplog.text


@pytest.mark.parametrize("p, q", [(0.0, 0.5), (0.5, 1.0)])
def test_divergent_mean_periods(p, q):
    with pytest.raises(DivergentPeriodError):
        mean_periods(TransitionProbs(p=p, q=q), 1.0, 1.0)


def test_continuous_limit_needs_rf_field():
    with pytest.raises(DivergentPeriodError):
        continuous_limit_periods(VSystemParams(omega2=0.0, omega3=40.0, a3=20.0))


def test_small_gap_estimate():
    assert small_gap_periods(1.0, 0.1, 0.0).t_light == pytest.approx(40.0)
    estimate = small_gap_periods(1.0, 0.1, 0.1)
    assert estimate.t_light == estimate.t_dark == pytest.approx(80.0)
    with pytest.raises(DivergentPeriodError):
        small_gap_periods(1.0, 0.0, 1.0)


def test_geometric_series_sums():
    assert light_period_series(0.3, 2.0, terms=400) == pytest.approx(2.0 / 0.3)
    assert dark_period_series(0.6, 2.0, terms=400) == pytest.approx(2.0 / 0.4)


def test_default_gap_threshold():
    assert default_gap_threshold(PARAMS) == pytest.approx(1.125)
    with pytest.raises(ValueError):
        default_gap_threshold(VSystemParams(omega2=1.0, omega3=0.0, a3=20.0))


def test_misclassification_bound():
    rate = 80 / 9
    # ten mean spacings leave about 0.29 spurious dark periods per light period
    default = misclassification_bound(PARAMS, default_gap_threshold(PARAMS))
    assert default == pytest.approx(720 * rate * math.exp(-10))
    assert misclassification_bound(PARAMS, 2.0) < 0.01
    assert misclassification_bound(PARAMS, 2.0) < default
    with pytest.raises(ValueError):
        misclassification_bound(PARAMS, 0.0)


def test_mean_periods_saturate_as_gap_closes():
    shelving = continuous_limit_periods(PARAMS)
    gaps = [2.0, 1.0, 0.5, 0.1, 0.02]
    light = [mean_periods(pq_corrected(PARAMS, dt, 1.0), dt, 1.0).t_light for dt in gaps]
    assert light[:4] == sorted(light[:4])
    assert light[-1] == pytest.approx(shelving.t_light, rel=0.1)
    assert max(light) <= 1.1 * shelving.t_light
    # the ideal estimate would keep growing like 1/dt^2
    assert small_gap_periods(1.0, 0.02, 1.0).t_light > 10 * light[-1]
    dark = mean_periods(pq_corrected(PARAMS, 0.02, 1.0), 0.02, 1.0).t_dark
    assert dark == pytest.approx(shelving.t_dark, rel=0.1)
