"""Results CSV: writing, reading back and grouped means."""

from __future__ import annotations

import csv
import math
from dataclasses import astuple, fields
from pathlib import Path

import pandas as pd

from stocksim.backtest.runner import EvaluationRow, sort_rows
from stocksim.errors import ConfigError

COLUMNS = tuple(f.name for f in fields(EvaluationRow))
METRICS = ("accuracy", "f1_macro", "profit", "sharpe")


def _cell(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return "" if math.isnan(v) else repr(v)
    return str(v)


def write_report(rows, path) -> Path:
    """Write one CSV line per row, header first, in key-column order.

    Floats use ``repr`` so the file round-trips exactly and reruns with the
    same seed are byte-identical. Metrics of failed runs are left empty.
    """
    rows = list(rows)
    if not rows:
        raise ConfigError("no rows to write")
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(COLUMNS)
        for r in sort_rows(rows):
            w.writerow([_cell(v) for v in astuple(r)])
    return path


def read_report(path) -> pd.DataFrame:
    df = pd.read_csv(path, keep_default_na=False, na_values={m: [""] for m in METRICS},
                     dtype={"similarity_value": str, "fixer": str, "error_tag": str},
                     float_precision="round_trip")
    missing = [c for c in COLUMNS if c not in df.columns]
    if missing:
        raise ConfigError(f"not a results file, missing columns: {', '.join(missing)}")
    return df


def aggregate(df: pd.DataFrame, group_by) -> pd.DataFrame:
    """Mean of every metric per group, over runs that produced metrics,
    plus the number of such runs (``n_runs``) and of failed ones (``n_errors``)."""
    group_by = [group_by] if isinstance(group_by, str) else list(group_by)
    unknown = [c for c in group_by if c not in df.columns]
    if unknown:
        raise ConfigError(f"unknown group-by columns: {', '.join(unknown)}")
    scored = df["accuracy"].notna()
    means = df[scored].groupby(group_by, sort=True)[list(METRICS)].mean()
    counts = df.assign(_ok=scored, _err=~scored).groupby(group_by, sort=True)[["_ok", "_err"]].sum()
    out = counts.rename(columns={"_ok": "n_runs", "_err": "n_errors"}).join(means)
    return out.reset_index()[group_by + list(METRICS) + ["n_runs", "n_errors"]]
