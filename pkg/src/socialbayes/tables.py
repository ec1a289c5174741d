"""Tabular output for trajectories, summaries, and check reports.

All files are plain text and append-only friendly: a timestamp line, a
block of ``# key: value`` metadata, then fixed-order rows.  Two row
encodings are supported:

* ``csv``   - header ``t,agent,mean,precision`` (or the columns listed
  in the header), one row per (time, agent) pair.
* ``jsonl`` - one JSON object per line with the same keys in the same
  order; the timestamp and metadata become leading ``{"generated": ..}``
  and ``{"meta": {..}}`` objects.

The first line of every file is the generation timestamp and is the only
line excluded when comparing files for reproducibility; everything after
it is deterministic for a fixed config and seed.  Floats are rendered
with ``repr`` (shortest round-trip form), so equal inputs give equal
bytes.  The truth agent's precision is written as ``inf``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .dynamics import EnsembleResult, SystemParams, Trajectory
from .expected import ExpectedTrajectory
from .schedules import GraphSchedule

FORMATS = ("csv", "jsonl")


def timestamp_line() -> str:
    return "# generated: " + datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def format_value(x) -> str:
    """Deterministic text form: repr for floats, str for ints/strings."""
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if np.isinf(x):
            return "inf" if x > 0 else "-inf"
        return repr(x)
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return str(x)


def _meta_lines(meta: dict) -> list[str]:
    return ["# %s: %s" % (k, format_value(v)) for k, v in meta.items()]


def _write_lines(path, lines) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n")
    return path


def write_table(path, meta: dict, columns: list[str], rows, fmt: str = "csv") -> Path:
    """Write rows (iterable of tuples matching `columns`) under a meta block."""
    if fmt not in FORMATS:
        raise ValueError("unknown format %r; expected one of %s" % (fmt, FORMATS))
    if fmt == "csv":
        lines = [timestamp_line()]
        lines.extend(_meta_lines(meta))
        lines.append(",".join(columns))
        for row in rows:
            lines.append(",".join(format_value(v) for v in row))
    else:
        # json.dumps emits bare Infinity for the truth agent's precision;
        # read_table parses it back, but strict JSON parsers will not.
        stamp = datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")
        lines = [json.dumps({"generated": stamp})]
        lines.append(json.dumps({"meta": {k: _jsonable(v) for k, v in meta.items()}}))
        for row in rows:
            lines.append(json.dumps(dict(zip(columns, (_jsonable(v) for v in row)))))
    return _write_lines(path, lines)


def _jsonable(v):
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    return v


@dataclass
class TableData:
    """Parsed table: metadata plus one array per column."""

    meta: dict
    columns: dict

    def __getitem__(self, name: str) -> np.ndarray:
        return self.columns[name]


def read_table(path) -> TableData:
    """Read a file written by write_table in either format."""
    text = Path(path).read_text().splitlines()
    if not text:
        raise ValueError("empty table file: %s" % path)
    if text[0].startswith("# ") or text[0].startswith("#"):
        return _read_csv(text, path)
    return _read_jsonl(text)


def _read_csv(lines, path) -> TableData:
    meta = {}
    header = None
    data = []
    for line in lines:
        if line.startswith("# generated:"):
            continue
        if line.startswith("# "):
            key, _, value = line[2:].partition(": ")
            meta[key] = value
            continue
        if not line.strip():
            continue
        if header is None:
            header = line.split(",")
            continue
        data.append(line.split(","))
    if header is None:
        raise ValueError("no header row in %s" % path)
    cols = {}
    for j, name in enumerate(header):
        raw = [row[j] for row in data]
        cols[name] = _as_array(raw)
    return TableData(meta=meta, columns=cols)


def _read_jsonl(lines) -> TableData:
    meta = {}
    rows = []
    for line in lines:
        if not line.strip():
            continue
        obj = json.loads(line)
        if "generated" in obj and len(obj) == 1:
            continue
        if "meta" in obj and len(obj) == 1:
            meta = obj["meta"]
            continue
        rows.append(obj)
    cols = {}
    if rows:
        for name in rows[0]:
            cols[name] = _as_array([r.get(name) for r in rows])
    return TableData(meta=meta, columns=cols)


def _as_array(values) -> np.ndarray:
    try:
        arr = np.array([float(v) for v in values])
    except (TypeError, ValueError):
        return np.array(values, dtype=object)
    if arr.size and np.all(np.isfinite(arr)) and np.all(arr == np.round(arr)):
        as_int = arr.astype(np.int64)
        if np.all(as_int == arr):
            return as_int
    return arr


TRAJECTORY_COLUMNS = ["t", "agent", "mean", "precision"]


def _trajectory_meta(params: SystemParams, kind: str, extra=None) -> dict:
    meta = {
        "kind": kind,
        "n": params.n,
        "truth": float(params.truth),
        "tau": float(params.tau),
        "tau0": float(params.tau0),
        "truth_noise": "on" if params.truth_noise else "off",
        "seed": params.seed,
    }
    if extra:
        meta.update(extra)
    return meta


def _trajectory_rows(times, means, precisions):
    for k, t in enumerate(times):
        for i in range(means.shape[1]):
            yield (int(t), i, float(means[k, i]), float(precisions[k, i]))


def _precisions_from_ledger(ledger: np.ndarray, params: SystemParams) -> np.ndarray:
    prec = params.tau * np.asarray(ledger, dtype=float)
    prec[:, 0] = np.inf
    return prec


def write_trajectory(path, traj: Trajectory, fmt: str = "csv") -> Path:
    meta = _trajectory_meta(traj.params, traj.kind, {"run": traj.run_index})
    prec = _precisions_from_ledger(traj.ledger, traj.params)
    rows = _trajectory_rows(traj.times, traj.means, prec)
    return write_table(path, meta, TRAJECTORY_COLUMNS, rows, fmt)


def ledger_for_times(schedule: GraphSchedule, params: SystemParams, times) -> np.ndarray:
    """Precision-ledger snapshots at the requested times, one forward pass."""
    times = np.asarray(times, dtype=np.int64)
    order = np.argsort(times)
    out = np.empty((len(times), params.n + 1))
    diag = np.full(params.n + 1, params.ratio)
    t = 0
    for pos in order:
        target = int(times[pos])
        while t < target:
            _, deg = schedule.arrays_at(t)
            diag[1:] += deg[1:]
            t += 1
        out[pos] = diag
    return out


def write_expected_trajectory(path, expected: ExpectedTrajectory,
                              schedule: GraphSchedule, fmt: str = "csv",
                              every: int = 1) -> Path:
    """Expected-process table in the trajectory format, kind flag included.

    `every` thins dense output to times divisible by it (last time kept).
    """
    times = expected.times
    keep = (times % every == 0) | (times == times[-1])
    times = times[keep]
    means = expected.means[keep]
    ledger = ledger_for_times(schedule, expected.params, times)
    prec = _precisions_from_ledger(ledger, expected.params)
    meta = _trajectory_meta(expected.params, expected.kind, {"run": 0})
    rows = _trajectory_rows(times, means, prec)
    return write_table(path, meta, TRAJECTORY_COLUMNS, rows, fmt)


SUMMARY_COLUMNS = ["t", "agent", "mean", "variance"]


def write_ensemble_summary(path, ens: EnsembleResult, fmt: str = "csv") -> Path:
    """Per-time, per-agent mean and across-run variance (ddof=1 when M > 1)."""
    meta = _trajectory_meta(ens.params, "ensemble-summary", {"runs": ens.n_runs})
    mean = ens.means.mean(axis=0)
    ddof = 1 if ens.n_runs > 1 else 0
    var = ens.means.var(axis=0, ddof=ddof)
    rows = (
        (int(t), i, float(mean[k, i]), float(var[k, i]))
        for k, t in enumerate(ens.times)
        for i in range(mean.shape[1])
    )
    return write_table(path, meta, SUMMARY_COLUMNS, rows, fmt)


def trajectory_norms(table: TableData):
    """(times, sup-norm of truth-shifted means) from a trajectory table.

    Works on expected, simulated, and ensemble-summary tables; the truth
    value comes from the metadata block.
    """
    truth = float(table.meta.get("truth", 0.0))
    t = np.asarray(table["t"])
    agent = np.asarray(table["agent"])
    mean = np.asarray(table["mean"], dtype=float)
    learners = agent >= 1
    t, mean = t[learners], mean[learners]
    times = np.unique(t)
    norms = np.empty(len(times))
    for k, tk in enumerate(times):
        norms[k] = np.max(np.abs(mean[t == tk] - truth))
    return times, norms


CHECK_COLUMNS = ["name", "lhs", "rhs", "margin", "status"]


def write_check_report(path, checks, fmt: str = "csv", extra_meta=None) -> Path:
    """One row per bound check: name, lhs, rhs, margin, pass/FAIL/gated."""
    meta = {"kind": "check-report", "checks": len(checks)}
    if extra_meta:
        meta.update(extra_meta)
    rows = []
    for c in checks:
        status = "pass" if c.passed else ("gated" if c.gated else "FAIL")
        rows.append((c.name, float(c.lhs), float(c.rhs), float(c.margin), status))
    return write_table(path, meta, CHECK_COLUMNS, rows, fmt)


def check_report_text(checks) -> str:
    """Human side of the verify report: aligned one-line-per-check text."""
    lines = []
    width = max([len(c.name) for c in checks], default=4)
    for c in checks:
        status = "pass" if c.passed else ("gated" if c.gated else "FAIL")
        lines.append("%-*s  lhs=%-24s rhs=%-24s margin=%-24s %s"
                     % (width, c.name, format_value(float(c.lhs)),
                        format_value(float(c.rhs)), format_value(float(c.margin)),
                        status))
    return "\n".join(lines)


RATE_COLUMNS = ["t", "norm"]


def write_rate_table(path, times, norms, meta=None, fmt: str = "csv") -> Path:
    base = {"kind": "rate-table"}
    if meta:
        base.update(meta)
    rows = ((int(t), float(v)) for t, v in zip(times, norms))
    return write_table(path, base, RATE_COLUMNS, rows, fmt)


def write_rate_report(path, fit, meta=None, fmt: str = "csv") -> Path:
    base = {"kind": "rate-report"}
    if meta:
        base.update(meta)
    columns = ["slope", "intercept", "bound", "slack", "window_lo", "window_hi",
               "n_points", "status"]
    row = (float(fit.slope), float(fit.intercept), float(fit.theoretical_bound),
           float(fit.slack), int(fit.window[0]), int(fit.window[1]),
           int(fit.n_points), fit.status)
    return write_table(path, base, columns, [row], fmt)


SWITCH_COLUMNS = ["k", "t_k", "s_k", "value_at_t", "bound_at_t",
                  "value_at_s", "bound_at_s"]


def write_switch_table(path, switches, meta=None, fmt: str = "csv") -> Path:
    base = {"kind": "switch-table", "cycles": len(switches)}
    if meta:
        base.update(meta)
    rows = (
        (int(sw.k), int(sw.t_k), int(sw.s_k), float(sw.value_at_t),
         float(sw.bound_at_t), float(sw.value_at_s), float(sw.bound_at_s))
        for sw in switches
    )
    return write_table(path, base, SWITCH_COLUMNS, rows, fmt)


def _comparable_lines(path) -> list[str]:
    lines = Path(path).read_text().splitlines()
    if lines and (lines[0].startswith("# generated:")
                  or lines[0].startswith('{"generated"')):
        lines = lines[1:]
    return lines


def files_match(path_a, path_b) -> bool:
    """Byte-level equality ignoring each file's leading timestamp line."""
    return _comparable_lines(path_a) == _comparable_lines(path_b)
