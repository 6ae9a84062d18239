"""Figures for aggregated backtest results (written to files, never shown)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402

from stocksim.backtest.report import METRICS  # noqa: E402


def _labels(df: pd.DataFrame, group_by) -> list[str]:
    return [" / ".join(str(v) for v in row) for row in df[list(group_by)].itertuples(index=False)]


def metric_bars(agg: pd.DataFrame, group_by, out_dir, prefix: str = "means") -> list[Path]:
    """One horizontal bar chart per metric, groups on the y axis."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    labels = _labels(agg, group_by)
    paths = []
    for metric in METRICS:
        fig, ax = plt.subplots(figsize=(7, 0.35 * len(labels) + 1.2))
        vals = agg[metric].to_numpy(dtype=float)
        colors = np.where(vals >= 0, "tab:blue", "tab:red")
        ax.barh(np.arange(len(vals)), vals, color=colors)
        ax.set_yticks(np.arange(len(vals)), labels, fontsize=8)
        ax.invert_yaxis()
        ax.axvline(0, color="black", lw=0.6)
        ax.set_xlabel(metric)
        ax.set_title(f"mean {metric} by {', '.join(group_by)}")
        fig.tight_layout()
        path = out_dir / f"{prefix}_{metric}.png"
        fig.savefig(path, dpi=100)
        plt.close(fig)
        paths.append(path)
    return paths


def profit_heatmap(df: pd.DataFrame, rows: str, cols: str, out_path, metric: str = "profit") -> Path:
    """Mean ``metric`` for every (rows, cols) pair as an annotated heat map."""
    table = df[df[metric].notna()].pivot_table(index=rows, columns=cols, values=metric, aggfunc="mean")
    fig, ax = plt.subplots(figsize=(1.2 * len(table.columns) + 2, 0.5 * len(table.index) + 1.5))
    data = table.to_numpy(dtype=float)
    lim = np.nanmax(np.abs(data)) if np.isfinite(data).any() else 1.0
    im = ax.imshow(data, cmap="RdYlGn", vmin=-lim, vmax=lim, aspect="auto")
    ax.set_xticks(range(len(table.columns)), [str(c) for c in table.columns], rotation=30, ha="right")
    ax.set_yticks(range(len(table.index)), [str(i) for i in table.index])
    for (i, j), v in np.ndenumerate(data):
        if np.isfinite(v):
            ax.text(j, i, f"{v:.2f}", ha="center", va="center", fontsize=8)
    ax.set_xlabel(cols)
    ax.set_ylabel(rows)
    fig.colorbar(im, ax=ax, label=f"mean {metric}")
    fig.tight_layout()
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out_path, dpi=100)
    plt.close(fig)
    return out_path
