"""Plain CSV writing/reading for sweep tables."""

from __future__ import annotations

import csv
import io
from pathlib import Path

import numpy as np

from .dynamics import SweepResult
from .params import TWO_PI

SWEEP_COLUMNS = ("delta_si_khz", "stress_mpa", "p_plus1", "p_minus1")


def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def table_text(columns: dict[str, list], comments: list[str] = ()) -> str:
    buf = io.StringIO()
    for c in comments:
        buf.write(f"# {c}\n")
    w = csv.writer(buf, lineterminator="\n")
    names = list(columns)
    w.writerow(names)
    for row in zip(*(columns[n] for n in names)):
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def sweep_columns(res: SweepResult) -> dict[str, list]:
    cols = {
        "delta_si_khz": list(res.delta_si / TWO_PI / 1e3),
        "stress_mpa": list(res.stress / 1e6),
        "p_plus1": list(res.p_plus1),
        "p_minus1": list(res.p_minus1),
    }
    if res.fwhm is not None:
        cols["fwhm_khz"] = [res.fwhm / TWO_PI / 1e3] * len(res.delta_si)
    return cols


def read_sweep_csv(path: str | Path) -> SweepResult:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(line for line in fh if not line.lstrip().startswith("#")))
    if not rows:
        raise ValueError(f"{path}: no data rows")
    missing = [c for c in SWEEP_COLUMNS if c not in rows[0]]
    if missing:
        raise ValueError(f"{path}: missing column(s) {', '.join(missing)}")
    col = {c: np.array([float(r[c]) if r[c] not in ("", "nan") else np.nan for r in rows]) for c in SWEEP_COLUMNS}
    order = np.argsort(col["delta_si_khz"], kind="stable")
    return SweepResult(
        delta_si=col["delta_si_khz"][order] * TWO_PI * 1e3,
        stress=col["stress_mpa"][order] * 1e6,
        p_plus1=col["p_plus1"][order],
        p_minus1=col["p_minus1"][order],
        metadata={"source": str(path)},
    )
