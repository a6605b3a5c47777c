"""Persisting mission results: a full JSON document plus versioned CSV summaries.

Every CSV starts with a ``# uavscs <kind> v<version>`` line followed by a header row.
Floats are written with ``repr`` so files round-trip exactly and are byte-stable.
"""
from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import numpy as np

from .scenario import scenario_to_document

CSV_VERSION = 1

# documented columns of each CSV kind
CSV_COLUMNS = {
    "trajectory": ["slot", "x_alice", "y_alice", "x_jack", "y_jack"],
    "rates": ["slot", "phase", "target", "secrecy_rate"],
    "gains": ["slot", "target", "gain_w", "gamma_w", "satisfied", "feasible"],
    "assignment": ["target", "x", "y", "slots"],
    "sweep": ["scheme", "param", "value", "asr_sc", "asr_scs", "asr_overall", "min_gain",
              "feasible", "status"],
}

RESULT_FILES = ("mission_result.json", "rates.csv", "trajectory.csv", "gains.csv",
                "assignment.csv")


class CsvFormatError(ValueError):
    pass


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def format_csv(kind: str, rows) -> str:
    buf = io.StringIO()
    buf.write(f"# uavscs {kind} v{CSV_VERSION}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS[kind])
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def write_csv(path, kind: str, rows) -> Path:
    path = Path(path)
    path.write_text(format_csv(kind, rows), encoding="utf-8")
    return path


def read_csv(path, kind: str) -> list[dict]:
    """Rows of a versioned CSV as dicts of strings; raises CsvFormatError on schema mismatch."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CsvFormatError(f"cannot read {path}: {exc}") from None
    lines = text.splitlines()
    if not lines or not lines[0].startswith(f"# uavscs {kind} v"):
        raise CsvFormatError(f"{path}: missing '# uavscs {kind} v<n>' header")
    version = lines[0].rsplit("v", 1)[-1]
    if version != str(CSV_VERSION):
        raise CsvFormatError(f"{path}: unsupported version {version}")
    reader = csv.reader(lines[1:])
    header = next(reader, None)
    if header != CSV_COLUMNS[kind]:
        raise CsvFormatError(f"{path}: columns {header} differ from {CSV_COLUMNS[kind]}")
    rows = []
    for i, r in enumerate(reader, start=3):
        if len(r) != len(header):
            raise CsvFormatError(f"{path}:{i}: expected {len(header)} fields, got {len(r)}")
        rows.append(dict(zip(header, r)))
    return rows


def parse_float(text: str):
    return None if text == "" else float(text)


# --------------------------------------------------------------------------- mission result

def trajectory_rows(result):
    pa = result.traj_alice.with_start()
    pj = result.traj_jack.with_start() if result.traj_jack is not None else None
    return [(n, pa[n, 0], pa[n, 1],
             None if pj is None else pj[n, 0], None if pj is None else pj[n, 1])
            for n in range(pa.shape[0])]


def rate_rows(result):
    owner = result.assignment.target_of()
    return [(n + 1, result.slot_phase(n + 1),
             owner[n + 1] + 1 if n + 1 in owner else None, result.rates[n])
            for n in range(result.N)]


def gain_rows(result):
    return [(g.slot, g.target + 1, g.gain, g.gamma, g.satisfied, g.feasible)
            for g in result.sensing]


def assignment_rows(result):
    targets = result.scenario.targets_array()
    return [(k + 1, targets[k, 0], targets[k, 1], " ".join(str(n) for n in per))
            for k, per in enumerate(result.assignment.slots)]


def _cmat(X):
    X = np.asarray(X)
    return {"re": X.real.tolist(), "im": X.imag.tolist()}


def result_document(result) -> dict:
    s = result.scenario
    return {
        "format": f"uavscs mission_result v{CSV_VERSION}",
        "scheme": result.scheme,
        "rng_seed": result.rng_seed,
        "scenario": scenario_to_document(s),
        "asr_sc": result.asr_sc,
        "asr_scs": result.asr_scs,
        "asr_overall": result.asr_overall,
        "rates": [float(r) for r in result.rates],
        "bcd_trace": [float(v) for v in result.bcd_trace],
        "assignment": [list(per) for per in result.assignment.slots],
        "sensing": [{"slot": g.slot, "target": g.target + 1, "gain_w": g.gain,
                     "gamma_w": g.gamma, "satisfied": g.satisfied, "feasible": g.feasible}
                    for g in result.sensing],
        "trajectory_alice": result.traj_alice.with_start().tolist(),
        "trajectory_jack": (None if result.traj_jack is None
                            else result.traj_jack.with_start().tolist()),
        "beams": [{"W_a": _cmat(b.W_a), "W_j": _cmat(b.W_j), "R_r": _cmat(b.R_r)}
                  for b in result.beams],
        "degraded": result.degraded,
        "violations": list(result.violations),
        "notes": list(result.notes),
        "solve_counts": dict(result.solve_counts),
        "wall_clock_s": result.wall_clock,
    }


def write_result(result, out_dir) -> list[Path]:
    """Write the five result files into ``out_dir`` (created if needed)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "mission_result.json").write_text(
        json.dumps(result_document(result), indent=2) + "\n", encoding="utf-8")
    write_csv(out / "rates.csv", "rates", rate_rows(result))
    write_csv(out / "trajectory.csv", "trajectory", trajectory_rows(result))
    write_csv(out / "gains.csv", "gains", gain_rows(result))
    write_csv(out / "assignment.csv", "assignment", assignment_rows(result))
    return [out / f for f in RESULT_FILES]
