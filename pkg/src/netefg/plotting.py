"""Render convergence figures from a metrics CSV.

Two panels: gaps against iteration on log-log axes (the time-average gap
should fall like 1/T) and squared distance to the equilibrium set on
semilog axes (should fall geometrically).  Written next to the CSV so a
run directory carries both the numbers and the picture.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

plt.rcParams.update({
    "figure.figsize": (10.0, 4.0),
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.size": 10,
})

GAP_SERIES = (("nash_gap_avg", "time-average Nash gap"),
              ("nash_gap_last", "last-iterate Nash gap"),
              ("symmetric_gap", "symmetric gap"))

DIST_SERIES = (("dist2_ne", "dist$^2$ to equilibrium set"),
               ("theta", r"$\Theta$"))


def _read_columns(path: Path) -> dict[str, list]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "t" not in reader.fieldnames:
            raise ValueError(f"{path}: not a metrics CSV (no 't' column)")
        columns: dict[str, list] = {name: [] for name in reader.fieldnames}
        for row in reader:
            for name in reader.fieldnames:
                raw = row.get(name, "")
                columns[name].append(float(raw) if raw not in ("", None) else None)
    return columns


def _series(columns: dict, name: str) -> tuple[list, list]:
    ts, ys = [], []
    for t, y in zip(columns["t"], columns.get(name, [])):
        if y is not None and y > 0:
            ts.append(t)
            ys.append(y)
    return ts, ys


def render_run(source: Path, target: Path) -> None:
    """Read a run CSV and write the two-panel PNG to `target`."""
    columns = _read_columns(Path(source))
    fig, (ax_gap, ax_dist) = plt.subplots(1, 2)

    drew = False
    for name, label in GAP_SERIES:
        ts, ys = _series(columns, name)
        if ts:
            ax_gap.loglog(ts, ys, label=label)
            drew = True
    ax_gap.set_xlabel("iteration")
    ax_gap.set_ylabel("gap")
    if drew:
        ax_gap.legend(fontsize=8)
    else:
        ax_gap.text(0.5, 0.5, "no gap data", ha="center", va="center",
                    transform=ax_gap.transAxes)

    drew = False
    for name, label in DIST_SERIES:
        ts, ys = _series(columns, name)
        if ts:
            ax_dist.semilogy(ts, ys, label=label)
            drew = True
    ax_dist.set_xlabel("iteration")
    ax_dist.set_ylabel("squared distance")
    if drew:
        ax_dist.legend(fontsize=8)
    else:
        ax_dist.text(0.5, 0.5, "no distance data", ha="center", va="center",
                     transform=ax_dist.transAxes)

    fig.tight_layout()
    fig.savefig(Path(target), dpi=150)
    plt.close(fig)
