"""Parsers for the bench results CSV and the optimizer trajectory CSV.

Both formats are consumed as written by the estimation tool; malformed
input raises with the offending line number.
"""

from __future__ import annotations

import csv
from pathlib import Path

RESULTS_HEADER = ["trial", "e_mn", "e_mpBC", "e_mp", "status"]
TRAJECTORY_HEADER = ["step", "bcd", "gn_bcd", "gn_full"]


class CsvFormatError(ValueError):
    """Input CSV does not match the expected contract."""


def _rows(path):
    path = Path(path)
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise CsvFormatError(f"{path}: empty file")
    return rows


def read_results(path):
    """Successful rows of a results CSV as a dict of float lists.

    Failed trials (any status other than ``ok``) are counted but excluded
    from the value columns.
    """
    rows = _rows(path)
    if [h.strip() for h in rows[0]] != RESULTS_HEADER:
        raise CsvFormatError(
            f"{path}: line 1 must be {','.join(RESULTS_HEADER)}"
        )
    out = {"e_mn": [], "e_mpBC": [], "e_mp": []}
    failures = 0
    for ln, row in enumerate(rows[1:], start=2):
        if len(row) != 5:
            raise CsvFormatError(f"{path}: line {ln} has {len(row)} fields, expected 5")
        if row[4] != "ok":
            failures += 1
            continue
        try:
            vals = [float(v) for v in row[1:4]]
        except ValueError:
            raise CsvFormatError(f"{path}: line {ln} has a non-numeric error value") from None
        out["e_mn"].append(vals[0])
        out["e_mpBC"].append(vals[1])
        out["e_mp"].append(vals[2])
    if not out["e_mn"]:
        raise CsvFormatError(f"{path}: no successful data rows")
    out["failures"] = failures
    return out


def read_trajectories(path):
    """Columns of a trajectory CSV as a dict of float lists keyed by method."""
    rows = _rows(path)
    if [h.strip() for h in rows[0]] != TRAJECTORY_HEADER:
        raise CsvFormatError(
            f"{path}: line 1 must be {','.join(TRAJECTORY_HEADER)}"
        )
    out = {name: [] for name in TRAJECTORY_HEADER}
    for ln, row in enumerate(rows[1:], start=2):
        if len(row) != 4:
            raise CsvFormatError(f"{path}: line {ln} has {len(row)} fields, expected 4")
        try:
            vals = [float(v) for v in row]
        except ValueError:
            raise CsvFormatError(f"{path}: line {ln} has a non-numeric value") from None
        for name, v in zip(TRAJECTORY_HEADER, vals):
            out[name].append(v)
    if not out["step"]:
        raise CsvFormatError(f"{path}: no data rows")
    return out


def below_equal_line_pct(x, y) -> float:
    """Percentage of points strictly below the equal line."""
    wins = sum(1 for a, b in zip(x, y) if b < a)
    return 100.0 * wins / len(x)
