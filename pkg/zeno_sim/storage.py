"""
CSV and JSON artifacts.

Floats are written with repr() so emission records read back losslessly
and output files are byte-identical for equal inputs. Emission records are
a CSV of (jump_time, pulse_index) rows with a JSON sidecar holding the
parameters, schedule and seed.
"""

import csv
import json
import logging
from dataclasses import asdict
from pathlib import Path
from typing import List, Sequence

from pydantic import BaseModel

from zeno_sim.errors import RecordParseError
from zeno_sim.models import (
    EmissionRecord,
    MasterTrajectory,
    OutcomeSequence,
    PeriodSample,
    PulseSchedule,
)
from zeno_sim.quantum import DIM, VSystemParams

logger = logging.getLogger(__name__)

RECORD_HEADER = ["jump_time", "pulse_index"]
OUTCOME_HEADER = ["index", "outcome"]
PERIOD_HEADER = ["kind", "duration", "pulse_count", "censored"]
MASTER_HEADER = [
    "t",
    "rho11",
    "rho22",
    "rho33",
    "re_rho12",
    "re_rho13",
    "re_rho23",
    "im_rho12",
    "im_rho13",
    "im_rho23",
]
_OFF_DIAGONAL = [(0, 1), (0, 2), (1, 2)]


def _float(value: float) -> str:
    return repr(float(value))


def _open_for_write(path: Path):
    path.parent.mkdir(parents=True, exist_ok=True)
    return path.open("w", newline="")


def _read_rows(path: Path, header: List[str]) -> List[List[str]]:
    with Path(path).open(newline="") as f:
        rows = list(csv.reader(f))
    if not rows or rows[0] != header:
        raise RecordParseError(f"{path}: expected header {','.join(header)}")
    for line, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise RecordParseError(f"{path}:{line}: expected {len(header)} fields, got {len(row)}")
    return rows[1:]


def sidecar_path(path: Path) -> Path:
    return Path(path).with_suffix(".json")


def write_record(record: EmissionRecord, path: Path) -> Path:
    path = Path(path)
    with _open_for_write(path) as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(RECORD_HEADER)
        for t, index in zip(record.jump_times, record.pulse_index):
            writer.writerow([_float(t), "" if index is None else str(index)])
    meta = {
        "params": asdict(record.params),
        "schedule": asdict(record.schedule),
        "seed": record.seed,
        "trajectory": record.trajectory,
    }
    sidecar_path(path).write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    logger.debug(f"Wrote {record.photon_count} jumps to {path}")
    return path


def read_record(path: Path) -> EmissionRecord:
    path = Path(path)
    rows = _read_rows(path, RECORD_HEADER)
    try:
        meta = json.loads(sidecar_path(path).read_text())
        params = VSystemParams(**meta["params"])
        schedule = PulseSchedule(**meta["schedule"])
        jump_times = [float(t) for t, _ in rows]
        pulse_index = [int(i) if i != "" else None for _, i in rows]
        return EmissionRecord(
            jump_times,
            pulse_index,
            params,
            schedule,
            seed=meta.get("seed"),
            trajectory=meta.get("trajectory", 0),
        )
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise RecordParseError(f"{path}: {exc}") from exc


def write_outcomes(seq: OutcomeSequence, path: Path) -> Path:
    path = Path(path)
    with _open_for_write(path) as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(OUTCOME_HEADER)
        for i, outcome in enumerate(seq.outcomes, start=1):
            writer.writerow([i, outcome.value])
    return path


def write_periods(samples: Sequence[PeriodSample], path: Path) -> Path:
    path = Path(path)
    with _open_for_write(path) as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(PERIOD_HEADER)
        for sample in samples:
            writer.writerow(
                [
                    sample.kind.value,
                    _float(sample.duration),
                    "" if sample.pulse_count is None else sample.pulse_count,
                    int(sample.censored),
                ]
            )
    return path


def write_master(trajectory: MasterTrajectory, path: Path) -> Path:
    path = Path(path)
    with _open_for_write(path) as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(MASTER_HEADER)
        for t, rho in zip(trajectory.times, trajectory.rhos):
            row = [t] + [rho[j, j].real for j in range(DIM)]
            row += [rho[j, k].real for j, k in _OFF_DIAGONAL]
            row += [rho[j, k].imag for j, k in _OFF_DIAGONAL]
            writer.writerow([_float(value) for value in row])
    return path


def write_json(model: BaseModel, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(model.json(indent=2, sort_keys=True) + "\n")
    logger.info(f"Wrote {path}")
    return path
