"""File formats: model JSON, time-series CSV, FRF CSV, results CSV, reports.

All writers emit deterministic bytes for identical inputs (fixed float
formatting, newline-terminated rows) so repeated runs can be compared
byte for byte.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
import numpy as np

from .models import FrequencyData, StateSpaceModel, TimeSeriesData

__all__ = [
    "FileFormatError",
    "save_model",
    "load_model",
    "save_timeseries",
    "load_timeseries",
    "save_frequency_data",
    "load_frequency_data",
    "save_records_csv",
    "load_records_csv",
    "save_summary",
    "save_report",
    "save_trajectory_csv",
]


class FileFormatError(ValueError):
    """A file does not match its documented schema."""


def _fmt(x: float) -> str:
    return f"{float(x):.17g}"


def save_model(path, model: StateSpaceModel) -> None:
    doc = {
        "n": model.n,
        "nu": model.nu,
        "ny": model.ny,
        "ts": model.ts,
        "A": [float(v) for v in model.A.ravel()],
        "B": [float(v) for v in model.B.ravel()],
        "C": [float(v) for v in model.C.ravel()],
        "D": [float(v) for v in model.D.ravel()],
    }
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def load_model(path) -> StateSpaceModel:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise FileFormatError(f"{path}: not valid JSON ({exc})") from None
    for key in ("n", "nu", "ny", "ts", "A", "B", "C", "D"):
        if key not in doc:
            raise FileFormatError(f"{path}: missing field '{key}'")
    n, nu, ny = int(doc["n"]), int(doc["nu"]), int(doc["ny"])
    shapes = {"A": (n, n), "B": (n, nu), "C": (ny, n), "D": (ny, nu)}
    mats = {}
    for key, shape in shapes.items():
        vals = doc[key]
        if len(vals) != shape[0] * shape[1]:
            raise FileFormatError(
                f"{path}: field '{key}' has {len(vals)} entries, expected "
                f"{shape[0] * shape[1]}"
            )
        mats[key] = np.array(vals, dtype=float).reshape(shape)
    return StateSpaceModel(mats["A"], mats["B"], mats["C"], mats["D"],
                           ts=float(doc["ts"]))


def _sidecar(path) -> Path:
    return Path(path).with_suffix(".json")


def save_timeseries(path, data: TimeSeriesData) -> None:
    """Write the CSV record plus a sidecar JSON carrying the sampling time."""
    path = Path(path)
    header = (["t"] + [f"u{j + 1}" for j in range(data.nu)]
              + [f"y{i + 1}" for i in range(data.ny)])
    lines = [",".join(header)]
    for t in range(data.n_samples):
        row = [_fmt(t * data.ts)]
        row += [_fmt(v) for v in data.u[t]]
        row += [_fmt(v) for v in data.y[t]]
        lines.append(",".join(row))
    path.write_text("\n".join(lines) + "\n")
    _sidecar(path).write_text(json.dumps({"ts": data.ts}) + "\n")


def load_timeseries(path, ts: float | None = None) -> TimeSeriesData:
    """Read a time-series CSV; ts comes from the argument or the sidecar."""
    path = Path(path)
    if ts is None:
        side = _sidecar(path)
        if not side.exists():
            raise FileFormatError(
                f"{path}: sampling time not given and sidecar {side} not found"
            )
        try:
            ts = float(json.loads(side.read_text())["ts"])
        except (json.JSONDecodeError, KeyError, TypeError, ValueError):
            raise FileFormatError(f"{side}: missing or invalid field 'ts'") from None
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise FileFormatError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    if not header or header[0] != "t":
        raise FileFormatError(f"{path}: first column must be 't'")
    nu = sum(1 for h in header if h.startswith("u"))
    ny = sum(1 for h in header if h.startswith("y"))
    expected = ["t"] + [f"u{j + 1}" for j in range(nu)] + [f"y{i + 1}" for i in range(ny)]
    if header != expected:
        raise FileFormatError(
            f"{path}: header must be t,u1..u{nu},y1..y{ny}, got {','.join(header)}"
        )
    u, y = [], []
    for ln, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise FileFormatError(f"{path}: line {ln} has {len(row)} fields, "
                                  f"expected {len(header)}")
        try:
            vals = [float(v) for v in row]
        except ValueError:
            raise FileFormatError(f"{path}: line {ln} has a non-numeric field") from None
        u.append(vals[1:1 + nu])
        y.append(vals[1 + nu:])
    return TimeSeriesData(np.array(u), np.array(y), ts=ts)


def save_frequency_data(path, fd: FrequencyData) -> None:
    path = Path(path)
    header = ["omega"]
    for i in range(fd.ny):
        for j in range(fd.nu):
            header += [f"reG_{i + 1}_{j + 1}", f"imG_{i + 1}_{j + 1}"]
    lines = [",".join(header)]
    for k in range(fd.n_freqs):
        row = [_fmt(fd.omega[k])]
        for i in range(fd.ny):
            for j in range(fd.nu):
                row += [_fmt(fd.G[k, i, j].real), _fmt(fd.G[k, i, j].imag)]
        lines.append(",".join(row))
    path.write_text("\n".join(lines) + "\n")
    _sidecar(path).write_text(json.dumps({"ts": fd.ts}) + "\n")


def load_frequency_data(path, ts: float | None = None) -> FrequencyData:
    path = Path(path)
    if ts is None:
        side = _sidecar(path)
        if side.exists():
            try:
                ts = float(json.loads(side.read_text())["ts"])
            except (json.JSONDecodeError, KeyError, TypeError, ValueError):
                raise FileFormatError(f"{side}: missing or invalid field 'ts'") from None
        else:
            ts = 0.0
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise FileFormatError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    if not header or header[0] != "omega":
        raise FileFormatError(f"{path}: first column must be 'omega'")
    pairs = header[1:]
    if len(pairs) % 2 != 0:
        raise FileFormatError(f"{path}: response columns must come in re/im pairs")
    ny = 0
    nu = 0
    for h in pairs[0::2]:
        if not h.startswith("reG_"):
            raise FileFormatError(f"{path}: unexpected column '{h}'")
        i, j = (int(v) for v in h[4:].split("_"))
        ny = max(ny, i)
        nu = max(nu, j)
    expected = ["omega"]
    for i in range(ny):
        for j in range(nu):
            expected += [f"reG_{i + 1}_{j + 1}", f"imG_{i + 1}_{j + 1}"]
    if header != expected:
        raise FileFormatError(
            f"{path}: header must list reG_i_j,imG_i_j row-major over outputs "
            f"then inputs, got {','.join(header)}"
        )
    omega, G = [], []
    for ln, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise FileFormatError(f"{path}: line {ln} has {len(row)} fields, "
                                  f"expected {len(header)}")
        try:
            vals = [float(v) for v in row]
        except ValueError:
            raise FileFormatError(f"{path}: line {ln} has a non-numeric field") from None
        omega.append(vals[0])
        re = np.array(vals[1::2]).reshape(ny, nu)
        im = np.array(vals[2::2]).reshape(ny, nu)
        G.append(re + 1j * im)
    return FrequencyData(np.array(omega), np.array(G), ts=ts)


_RESULTS_HEADER = "trial,e_mn,e_mpBC,e_mp,status"


def save_records_csv(path, records) -> None:
    """Results CSV: header trial,e_mn,e_mpBC,e_mp,status; failures carry no values."""
    lines = [_RESULTS_HEADER]
    for rec in sorted(records, key=lambda r: r.trial):
        if rec.status == "ok":
            lines.append(",".join([str(rec.trial), _fmt(rec.e_mn),
                                   _fmt(rec.e_mpBC), _fmt(rec.e_mp), "ok"]))
        else:
            lines.append(f"{rec.trial},,,,{rec.status}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_records_csv(path):
    """Rows of the results CSV as (trial, e_mn, e_mpBC, e_mp, status) tuples."""
    path = Path(path)
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or ",".join(rows[0]) != _RESULTS_HEADER:
        raise FileFormatError(f"{path}: header must be {_RESULTS_HEADER}")
    out = []
    for ln, row in enumerate(rows[1:], start=2):
        if len(row) != 5:
            raise FileFormatError(f"{path}: line {ln} has {len(row)} fields, expected 5")
        trial = int(row[0])
        status = row[4]
        if status == "ok":
            try:
                vals = tuple(float(v) for v in row[1:4])
            except ValueError:
                raise FileFormatError(f"{path}: line {ln} has a non-numeric error") from None
            if any(math.isnan(v) for v in vals):
                raise FileFormatError(f"{path}: line {ln} carries NaN errors")
            out.append((trial, *vals, status))
        else:
            out.append((trial, None, None, None, status))
    return out


def save_summary(path, summary: dict) -> None:
    Path(path).write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")


def save_report(path, report) -> None:
    Path(path).write_text(json.dumps(report.to_json_dict(), indent=2) + "\n")


def save_trajectory_csv(path, steps, table) -> None:
    """Trajectory CSV consumed by the plotting tools: step,bcd,gn_bcd,gn_full."""
    lines = ["step,bcd,gn_bcd,gn_full"]
    for k, row in zip(steps, table):
        lines.append(",".join([str(int(k))] + [_fmt(v) for v in row]))
    Path(path).write_text("\n".join(lines) + "\n")
