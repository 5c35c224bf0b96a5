"""Comma-separated file formats for cohorts, prediction matrices, step functions and results.

All files are UTF-8 with a header row. Floats are written with ``repr`` so
that reading a file back returns the exact values; missing values are empty
fields.
"""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .censoring import StepSurvival
from .survival_core import Cohort, SurvivalMatrix, TimeGrid, discretize, validate

__all__ = [
    "DataError",
    "read_cohort",
    "write_cohort",
    "read_predictions",
    "write_predictions",
    "write_results",
    "read_results",
    "write_summary",
    "read_summary",
    "write_reports",
    "read_config",
    "read_grid",
    "write_step_function",
    "read_step_function",
    "RESULT_FIELDS",
    "SUMMARY_FIELDS",
    "REPORT_FIELDS",
]

RESULT_FIELDS = ("scenario", "level", "replication", "metric", "t", "value",
                 "usable_pairs", "undefined")
SUMMARY_FIELDS = ("scenario", "level", "metric", "t", "count", "undefined", "median", "q1",
                  "q3", "sd", "reference")
REPORT_FIELDS = ("metric", "t", "value", "numerator", "denominator", "usable_pairs",
                 "tie_pairs", "max_weight", "undefined")


class DataError(ValueError):
    """Malformed or inconsistent input file."""


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _float(s: str, where: str) -> float:
    try:
        v = float(s)
    except ValueError:
        raise DataError(f"{where}: cannot parse {s!r} as a number") from None
    return v


def _opt_float(s: str) -> Optional[float]:
    return None if s == "" else float(s)


def _rows(path) -> Tuple[List[str], List[Tuple[int, List[str]]]]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path}: file is empty") from None
        body = [(reader.line_num, row) for row in reader if row]
    return header, body


def _write(target, header: Sequence[str], rows: Iterable[Sequence]):
    """Write to a path or to an already open text stream."""
    if hasattr(target, "write"):
        w = csv.writer(target, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(x) for x in r])
        return
    with open(target, "w", newline="", encoding="utf-8") as fh:
        _write(fh, header, rows)


def read_cohort(path, horizon: Optional[float] = None, grid: Optional[TimeGrid] = None) -> Cohort:
    """Read ``id,time,event,z_1..z_p``.

    ``horizon`` defaults to infinity (no administrative censoring); with a
    ``grid`` the times are discretised and the horizon is the last period.
    """
    header, body = _rows(path)
    if header[:3] != ["id", "time", "event"]:
        raise DataError(f"{path}: header must start with id,time,event, got {header[:3]}")
    p = len(header) - 3
    ids, times, events, Z = [], [], [], []
    seen = set()
    for line, row in body:
        where = f"{path}, line {line}"
        if len(row) != len(header):
            raise DataError(f"{where}: expected {len(header)} fields, found {len(row)}")
        sid = row[0].strip()
        if sid in seen:
            raise DataError(f"{where}: duplicate id {sid!r}")
        seen.add(sid)
        t = _float(row[1], where)
        if not math.isfinite(t) or t < 0:
            raise DataError(f"{where}: time must be finite and nonnegative, got {row[1]!r}")
        if row[2].strip() not in ("0", "1"):
            raise DataError(f"{where}: event must be 0 or 1, got {row[2]!r}")
        z = [_float(v, where) for v in row[3:]]
        if any(math.isnan(v) for v in z):
            raise DataError(f"{where}: missing covariates are not supported")
        ids.append(sid)
        times.append(t)
        events.append(row[2].strip() == "1")
        Z.append(z)
    X = np.array(times, dtype=float)
    ev = np.array(events, dtype=bool)
    Zm = np.array(Z, dtype=float).reshape(len(ids), p)
    h = math.inf if horizon is None else float(horizon)
    if grid is not None:
        h = math.inf
    if np.any(ev & (X >= h)):
        k = int(np.flatnonzero(ev & (X >= h))[0])
        raise DataError(f"{path}: subject {ids[k]} has an event at or after the horizon {h}")
    cohort = Cohort.from_observed(X, ev, Zm, h, ids=ids)
    if grid is not None:
        cohort = discretize(cohort, grid)
    problems = validate(cohort)
    if problems:
        raise DataError(f"{path}: " + "; ".join(problems))
    return cohort


def write_cohort(cohort: Cohort, path):
    header = ["id", "time", "event"] + [f"z_{k + 1}" for k in range(cohort.p)]
    rows = ([cohort.ids[i], float(cohort.observed_time[i]), int(cohort.event[i])]
            + [float(z) for z in cohort.covariates[i]] for i in range(cohort.n))
    _write(path, header, rows)


def read_predictions(path, cohort: Optional[Cohort] = None,
                     allow_nonmonotone: bool = False) -> Tuple[SurvivalMatrix, int]:
    """Read ``id,t_1..t_m`` rows of survival probabilities.

    Returns the matrix (rows in cohort order when a cohort is given) and the
    number of entries lowered to the running minimum, which is nonzero only
    with ``allow_nonmonotone``.
    """
    header, body = _rows(path)
    if not header or header[0] != "id":
        raise DataError(f"{path}: first header field must be 'id'")
    times = [_float(h, f"{path}, header") for h in header[1:]]
    if not times:
        raise DataError(f"{path}: no time columns")
    if any(b <= a for a, b in zip(times, times[1:])):
        raise DataError(f"{path}: header times must be strictly increasing")
    ids, vals = [], []
    for line, row in body:
        where = f"{path}, line {line}"
        if len(row) != len(header):
            raise DataError(f"{where}: expected {len(header)} fields, found {len(row)}")
        v = [_float(x, where) for x in row[1:]]
        for k, x in enumerate(v):
            if not 0 <= x <= 1:
                raise DataError(f"{where}, column {header[k + 1]}: probability {x} outside [0, 1]")
        ids.append(row[0].strip())
        vals.append(v)
    values = np.array(vals, dtype=float).reshape(len(ids), len(times))
    clipped = 0
    rising = np.diff(values, axis=1) > 0
    if rising.any():
        if not allow_nonmonotone:
            r, c = (int(a[0]) for a in np.nonzero(rising))
            raise DataError(f"{path}: row {ids[r]} increases at column {header[c + 2]} "
                            "(use --allow-nonmonotone to clip)")
        fixed = np.minimum.accumulate(values, axis=1)
        clipped = int(np.count_nonzero(fixed != values))
        values = fixed
    if cohort is not None:
        pos = {sid: k for k, sid in enumerate(ids)}
        if len(pos) != len(ids):
            raise DataError(f"{path}: duplicate ids")
        missing = [sid for sid in cohort.ids if sid not in pos]
        if missing or len(ids) != cohort.n:
            detail = f"missing id {missing[0]}" if missing else "extra ids"
            raise DataError(f"{path}: prediction ids do not match the cohort ({detail})")
        order = [pos[sid] for sid in cohort.ids]
        values = values[order]
        ids = list(cohort.ids)
    return SurvivalMatrix(np.array(times), values, ids), clipped


def write_predictions(matrix: SurvivalMatrix, path):
    ids = matrix.ids if matrix.ids is not None else [str(i + 1) for i in range(matrix.shape[0])]
    header = ["id"] + [_fmt(float(t)) for t in matrix.times]
    _write(path, header, ([ids[i]] + [float(v) for v in matrix.values[i]]
                          for i in range(matrix.shape[0])))


def write_results(records: Iterable[dict], path):
    """Long format, one row per (scenario, level, replication, metric, t)."""
    _write(path, RESULT_FIELDS, ([r.get(k) for k in RESULT_FIELDS] for r in records))


def read_results(path) -> List[dict]:
    header, body = _rows(path)
    if tuple(header) != RESULT_FIELDS:
        raise DataError(f"{path}: expected header {','.join(RESULT_FIELDS)}")
    out = []
    for line, row in body:
        if len(row) != len(header):
            raise DataError(f"{path}, line {line}: expected {len(header)} fields")
        d = dict(zip(header, row))
        try:
            out.append({"scenario": d["scenario"], "level": d["level"],
                        "replication": int(d["replication"]), "metric": d["metric"],
                        "t": _opt_float(d["t"]), "value": _opt_float(d["value"]),
                        "usable_pairs": int(d["usable_pairs"]),
                        "undefined": d["undefined"] == "1"})
        except ValueError as e:
            raise DataError(f"{path}, line {line}: {e}") from None
    return out


def write_summary(summaries: Iterable[dict], path):
    _write(path, SUMMARY_FIELDS, ([s.get(k) for k in SUMMARY_FIELDS] for s in summaries))


def read_summary(path) -> List[dict]:
    header, body = _rows(path)
    if tuple(header) != SUMMARY_FIELDS:
        raise DataError(f"{path}: expected header {','.join(SUMMARY_FIELDS)}")
    out = []
    for _, row in body:
        d = dict(zip(header, row))
        rec = {"scenario": d["scenario"], "level": d["level"], "metric": d["metric"],
               "t": _opt_float(d["t"]), "count": int(d["count"]),
               "undefined": int(d["undefined"])}
        for k in ("median", "q1", "q3", "sd", "reference"):
            rec[k] = _opt_float(d[k])
        out.append(rec)
    return out


def write_reports(reports, path):
    """Write :class:`MetricReport` records (path or open text stream)."""
    _write(path, REPORT_FIELDS, ([r.metric, r.t, r.value, r.numerator, r.denominator,
                                  r.usable_pairs, r.tie_pairs, r.max_weight, r.undefined]
                                 for r in reports))


def read_config(path) -> dict:
    """Load a JSON or YAML mapping."""
    text = Path(path).read_text(encoding="utf-8")
    if str(path).lower().endswith(".json"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise DataError(f"{path}: {e}") from None
    else:
        import yaml
        try:
            data = yaml.safe_load(text)
        except yaml.YAMLError as e:
            raise DataError(f"{path}: {e}") from None
    if not isinstance(data, dict):
        raise DataError(f"{path}: top level must be a mapping")
    return data


def read_grid(path) -> TimeGrid:
    """Grid points separated by commas or newlines; a trailing ``inf`` is allowed."""
    text = Path(path).read_text(encoding="utf-8").replace("\n", ",")
    pts = [s.strip() for s in text.split(",") if s.strip()]
    try:
        return TimeGrid.from_points([float(s) for s in pts])
    except ValueError as e:
        raise DataError(f"{path}: {e}") from None


def write_step_function(g: StepSurvival, path):
    _write(path, ("time", "value"), g.to_table())


def read_step_function(path) -> StepSurvival:
    header, body = _rows(path)
    if header != ["time", "value"]:
        raise DataError(f"{path}: expected header time,value")
    rows = [(_float(r[0], f"{path}, line {n}"), _float(r[1], f"{path}, line {n}"))
            for n, r in body]
    try:
        return StepSurvival.from_table(rows)
    except ValueError as e:
        raise DataError(f"{path}: {e}") from None
