"""
Command-line front end for the light/dark period simulations.

Subcommands:
- ideal:      projective measurements of a driven two-level system
- pulsed:     quantum-jump trajectories of the V system under probe pulses
- continuous: both fields on, photon bursts segmented by a gap threshold
- theory:     closed-form transition probabilities and mean periods
- verify:     self-checks against exact and master-equation answers

Results go to --out as CSV/JSON; the same config and seed give
byte-identical files.
"""

import argparse
import logging
import math
import sys
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from zeno_sim import storage
from zeno_sim.batch import run_batch
from zeno_sim.config import Mode, RunConfig, load_config
from zeno_sim.errors import ConfigError, DivergentPeriodError, RecordParseError, ZenoError
from zeno_sim.ideal import ideal_period_stats, mean_period_exact, run_ideal_sequence
from zeno_sim.jumps import run_continuous, run_trajectory, validity_report
from zeno_sim.models import PeriodKind
from zeno_sim.periods import (
    PeriodReport,
    classify_pulses,
    extract_periods,
    pulse_outcome_sequence,
    report,
    segment_periods,
    z_score,
)
from zeno_sim.quantum import basis
from zeno_sim.reports import IdealReport, TheoryReport
from zeno_sim.theory import (
    continuous_limit_periods,
    default_gap_threshold,
    mean_periods,
    misclassification_bound,
    pq,
    pq_corrected,
    small_gap_periods,
)
from zeno_sim.verify import reference_master, run_checks

# Configure logging
logging.basicConfig(
    level=logging.INFO, format='%(asctime)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger(__name__)

TIMELINE_WIDTH = 100
TIMELINE_LIMIT = 400
# spurious dark periods per light period tolerated before warning
MISCLASSIFICATION_LIMIT = 0.01

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_VERIFY = 4


def format_timeline(
    flags: Sequence[bool], width: int = TIMELINE_WIDTH, limit: int = TIMELINE_LIMIT
) -> List[str]:
    """One column per pulse: '|' for LIGHT (A), '.' for DARK (PERP)."""
    marks = "".join(
        "|" if kind is PeriodKind.LIGHT else "."
        for kind in pulse_outcome_sequence(list(flags)[:limit])
    )
    return [marks[i:i + width] for i in range(0, len(marks), width)]


def _print_timeline(flags: Sequence[bool]) -> None:
    for line in format_timeline(flags):
        print(line)


def _format_z(z: Optional[float]) -> str:
    return "undefined" if z is None else f"{z:.2f}"


def _print_period_report(result: PeriodReport) -> None:
    print(
        f"Light periods: {result.n_light}, mean {result.mean_light:.4f} "
        f"+- {result.se_light:.4f}, theory {result.theory_light:.4f} "
        f"(z = {_format_z(result.z_light)})"
    )
    print(
        f"Dark periods: {result.n_dark}, mean {result.mean_dark:.4f} "
        f"+- {result.se_dark:.4f}, theory {result.theory_dark:.4f} "
        f"(z = {_format_z(result.z_dark)})"
    )


def cmd_ideal(config: RunConfig) -> int:
    dt = config.effective_gap
    if not dt > 0:
        raise ConfigError("ideal mode needs a measurement spacing gap > 0")
    print(f"T_pi = {config.t_pi:.6g}, dt = {dt:.6g}")
    rng = np.random.default_rng(config.seed)
    seq = run_ideal_sequence(basis(1), config.omega2, dt, config.n_pulses, rng)
    storage.write_outcomes(seq, config.out / "outcomes.csv")
    _print_timeline(seq.as_flags())

    periods = ideal_period_stats(seq)
    expected = mean_period_exact(config.omega2, dt)
    result = IdealReport(
        omega2=config.omega2,
        dt=dt,
        t_pi=config.t_pi,
        n_measurements=config.n_pulses,
        mean_a=periods.mean_a,
        se_a=periods.se_a,
        count_a=periods.count_a,
        mean_perp=periods.mean_perp,
        se_perp=periods.se_perp,
        count_perp=periods.count_perp,
        theory=expected,
        z_a=z_score(periods.mean_a, expected, periods.se_a),
        z_perp=z_score(periods.mean_perp, expected, periods.se_perp),
        z_between=z_score(
            periods.mean_a, periods.mean_perp, math.hypot(periods.se_a, periods.se_perp)
        ),
    )
    storage.write_json(result, config.out / "ideal.json")
    print(
        f"T1 = {result.mean_a:.4f} +- {result.se_a:.4f} ({result.count_a} periods), "
        f"T2 = {result.mean_perp:.4f} +- {result.se_perp:.4f} ({result.count_perp} periods), "
        f"theory {expected:.4f}"
    )
    return EXIT_OK


def _assemble(records, config: RunConfig, schedule, gap_threshold=None):
    samples, all_periods = [], []
    for i, record in enumerate(records):
        record.seed = config.seed
        record.trajectory = i
        storage.write_record(record, config.out / "records" / f"record_{i:04d}.csv")
        all_periods.extend(segment_periods(record, schedule, gap_threshold))
        samples.extend(extract_periods(record, schedule, gap_threshold))
    storage.write_periods(all_periods, config.out / "periods.csv")
    logger.info(f"Extracted {len(samples)} complete periods from {len(records)} trajectories")
    return samples


def cmd_pulsed(config: RunConfig) -> int:
    schedule = config.schedule()
    if schedule.continuous:
        raise ConfigError("pulsed mode needs gap > 0; use the continuous command")
    params = config.params
    print(f"T_pi = {config.t_pi:.6g}, pulse {schedule.pulse_duration:.6g}, gap {schedule.gap:.6g}")
    validity = validity_report(params, schedule)
    storage.write_json(validity, config.out / "validity.json")
    for check in validity.violations():
        print(f"warning: {check.name} ratio {check.ratio:.3g} < 10 ({check.note})")

    records = run_batch(
        run_trajectory,
        config.trajectories,
        config.seed,
        config.workers,
        params=params,
        schedule=schedule,
    )
    samples = _assemble(records, config, schedule)
    _print_timeline(classify_pulses(records[0], schedule))

    theory = mean_periods(
        pq_corrected(params, schedule.gap, schedule.pulse_duration),
        schedule.gap,
        schedule.pulse_duration,
    )
    result = report(samples, theory)
    storage.write_json(result, config.out / "report.json")
    _print_period_report(result)
    return EXIT_OK


def cmd_continuous(config: RunConfig) -> int:
    if config.total_duration is None:
        raise ConfigError("continuous mode needs total_duration")
    schedule = config.schedule()
    params = config.params
    threshold = config.gap_threshold
    if threshold is None:
        threshold = default_gap_threshold(params) if params.omega3 > 0 else schedule.duration
    print(f"T_pi = {config.t_pi:.6g}, gap threshold {threshold:.6g}")
    bound = None
    if params.omega3 > 0 and params.omega2 > 0:
        bound = misclassification_bound(params, threshold)
        if bound > MISCLASSIFICATION_LIMIT:
            print(
                f"warning: about {bound:.3g} spurious dark periods per light period "
                f"at gap threshold {threshold:.6g}"
            )

    records = run_batch(
        run_continuous,
        config.trajectories,
        config.seed,
        config.workers,
        params=params,
        total_duration=schedule.duration,
    )
    samples = _assemble(records, config, schedule, threshold)
    result = report(samples, continuous_limit_periods(params), gap_threshold=threshold)
    result.misclassification_bound = bound
    storage.write_json(result, config.out / "report.json")
    _print_period_report(result)
    return EXIT_OK


def _optional_periods(factory):
    try:
        return factory()
    except DivergentPeriodError as exc:
        logger.warning(f"Mean periods undefined: {exc}")
        return None


def cmd_theory(config: RunConfig) -> int:
    params = config.params
    if params.omega3 == 0:
        raise ConfigError("the period theory needs a probe field (omega3 > 0)")
    gap = config.effective_gap
    tau = config.pulse_duration
    schedule = (
        config.schedule() if config.total_duration is not None or gap > 0 else None
    )
    validity = validity_report(params, schedule) if schedule is not None else None
    raw = pq(params, gap, tau)
    corrected = pq_corrected(params, gap, tau)
    pulsed = _optional_periods(lambda: mean_periods(corrected, gap, tau))
    small = None
    if gap > 0:
        small = _optional_periods(lambda: small_gap_periods(params.omega2, gap, tau))
    shelving = _optional_periods(lambda: continuous_limit_periods(params))

    result = TheoryReport(
        omega2=params.omega2,
        omega3=params.omega3,
        a3=params.a3,
        pulse_duration=tau,
        gap=gap,
        t_pi=config.t_pi,
        eps_p=params.eps_p,
        eps_r=params.eps_r,
        eps_a=params.eps_a,
        validity=validity,
        p=raw.p,
        q=raw.q,
        p_corrected=corrected.p,
        q_corrected=corrected.q,
        clamped=raw.clamped or corrected.clamped,
        t_light=pulsed.t_light if pulsed else None,
        t_dark=pulsed.t_dark if pulsed else None,
        small_gap_estimate=small.t_light if small else None,
        continuous_t_light=shelving.t_light if shelving else None,
        continuous_t_dark=shelving.t_dark if shelving else None,
        gap_threshold=default_gap_threshold(params),
    )
    storage.write_json(result, config.out / "theory.json")
    print(f"T_pi = {result.t_pi:.6g}")
    print(f"eps_p = {result.eps_p:.4g}, eps_R = {result.eps_r:.4g}, eps_A = {result.eps_a:.4g}")
    print(f"p = {result.p:.6f}, q = {result.q:.6f}")
    print(f"p~ = {result.p_corrected:.6f}, q~ = {result.q_corrected:.6f}")
    if pulsed:
        print(f"Pulsed: T_L = {pulsed.t_light:.4f}, T_D = {pulsed.t_dark:.4f}")
    if small:
        print(f"Small-gap estimate: T_L ~ T_D ~ {small.t_light:.4f}")
    if shelving:
        print(f"Continuous limit: T_L = {shelving.t_light:.4f}, T_D = {shelving.t_dark:.4f}")
    return EXIT_OK


def cmd_verify(config: RunConfig) -> int:
    if config.record_path is not None:
        record = storage.read_record(config.record_path)
        print(f"Record {config.record_path}: {record.photon_count} photons parsed")
    result = run_checks(seed=config.seed)
    storage.write_json(result, config.out / "verify.json")
    storage.write_master(reference_master(), config.out / "master.csv")
    for check in result.checks:
        print(f"{'PASS' if check.passed else 'FAIL'} {check.name}: {check.detail}")
    for failure in result.failures:
        print(f"FAIL {failure.name}: {failure.detail}", file=sys.stderr)
    passed = len(result.checks) - len(result.failures)
    print(f"{passed}/{len(result.checks)} checks passed")
    return EXIT_OK if result.passed else EXIT_VERIFY


COMMANDS = {
    Mode.IDEAL: cmd_ideal,
    Mode.PULSED: cmd_pulsed,
    Mode.CONTINUOUS: cmd_continuous,
    Mode.THEORY: cmd_theory,
    Mode.VERIFY: cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON run configuration")
    common.add_argument("--seed", type=int, help="Random seed (unsigned 64-bit, default: 0)")
    common.add_argument("--out", type=Path, help="Output directory (default: out)")
    common.add_argument(
        "--trajectories", type=int, help="Number of independent trajectories (default: 1)"
    )
    common.add_argument(
        "--gap-threshold",
        type=float,
        help="Inter-photon gap that ends a light period under continuous driving",
    )
    common.add_argument("--workers", type=int, help="Worker processes (default: 1)")

    parser = argparse.ArgumentParser(
        description="Light and dark periods of a V-system atom under repeated probe pulses"
    )
    commands = parser.add_subparsers(dest="mode", required=True)
    commands.add_parser(
        "ideal", parents=[common], help="Ideal projective measurements of a two-level system"
    )
    commands.add_parser("pulsed", parents=[common], help="Quantum-jump runs with probe pulses")
    commands.add_parser(
        "continuous", parents=[common], help="Quantum-jump runs with continuous driving"
    )
    commands.add_parser("theory", parents=[common], help="Closed-form mean periods")
    verify = commands.add_parser("verify", parents=[common], help="Run the self-check suite")
    verify.add_argument("--record", type=Path, help="Emission record CSV to re-parse")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main CLI entry point."""
    args = build_parser().parse_args(argv)
    overrides = {
        "mode": args.mode,
        "seed": args.seed,
        "out": args.out,
        "trajectories": args.trajectories,
        "gap_threshold": args.gap_threshold,
        "workers": args.workers,
        "record_path": getattr(args, "record", None),
    }
    try:
        config = load_config(args.config, overrides)
        return COMMANDS[config.mode](config)
    except ConfigError as e:
        logger.error(f"Invalid configuration: {e}")
        return EXIT_CONFIG
    except (RecordParseError, OSError) as e:
        logger.error(f"Error reading or writing files: {e}")
        return EXIT_IO
    except ZenoError as e:
        logger.error(f"Error running {args.mode}: {e}")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
