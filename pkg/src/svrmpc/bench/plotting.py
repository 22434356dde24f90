"""Plot-ready sweep series and a simple SVG rendering.

For every reintroduction count present in the report this writes one
``sweep_<theta>.csv`` (threshold on x; normalised cost and mean active
DoFs on y) plus a two-panel ``plot.svg``.
"""

from __future__ import annotations

import csv
import math
from pathlib import Path
from typing import Dict, List, Sequence, Tuple

from ..selection import SVR_METHODS

SWEEP_COLUMNS = ("rho", "mean_normalized_cost", "ci90_normalized_cost",
                 "mean_dofs", "ci90_dofs")


def _fmt(value) -> str:
    if isinstance(value, float):
        return "nan" if math.isnan(value) else repr(float(value))
    return str(value)


def sweep_series(aggregate_rows: Sequence) -> Dict[int, List[dict]]:
    """Group adaptive-method aggregate rows by theta, sorted by rho."""
    series: Dict[int, List[dict]] = {}
    for row in aggregate_rows:
        get = row.get if isinstance(row, dict) else lambda k, r=row: getattr(r, k)
        if get("method") not in SVR_METHODS:
            continue
        theta = int(get("theta"))
        series.setdefault(theta, []).append({
            "rho": float(get("rho")),
            "mean_normalized_cost": float(get("mean_normalized_cost")),
            "ci90_normalized_cost": float(get("ci90_normalized_cost")),
            "mean_dofs": float(get("mean_dofs")),
            "ci90_dofs": float(get("ci90_dofs")),
        })
    for theta in series:
        series[theta].sort(key=lambda r: r["rho"])
    return series


def emit_plot_data(aggregate_rows: Sequence, out_dir: Path) -> List[Path]:
    """Write sweep CSVs and the SVG; empty input yields empty files."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    series = sweep_series(aggregate_rows)
    written = []
    for theta, rows in sorted(series.items()):
        path = out_dir / f"sweep_{theta}.csv"
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(SWEEP_COLUMNS)
            for r in rows:
                writer.writerow([_fmt(r[c]) for c in SWEEP_COLUMNS])
        written.append(path)
    svg_path = out_dir / "plot.svg"
    _render_svg(series, svg_path)
    written.append(svg_path)
    return written


def _render_svg(series: Dict[int, List[dict]], path: Path) -> None:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, (ax_cost, ax_dofs) = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
    for theta, rows in sorted(series.items()):
        xs = list(range(len(rows)))  # categorical axis: rho values are not equally spaced
        labels = [f"{r['rho']:g}" for r in rows]
        cost = [r["mean_normalized_cost"] for r in rows]
        cost_ci = [r["ci90_normalized_cost"] for r in rows]
        dofs = [r["mean_dofs"] for r in rows]
        dofs_ci = [r["ci90_dofs"] for r in rows]
        ax_cost.plot(xs, cost, marker="o", label=f"theta = {theta}")
        ax_cost.fill_between(xs, [c - e for c, e in zip(cost, cost_ci)],
                             [c + e for c, e in zip(cost, cost_ci)], alpha=0.2)
        ax_dofs.plot(xs, dofs, marker="o")
        ax_dofs.fill_between(xs, [c - e for c, e in zip(dofs, dofs_ci)],
                             [c + e for c, e in zip(dofs, dofs_ci)], alpha=0.2)
        ax_dofs.set_xticks(xs)
        ax_dofs.set_xticklabels(labels)
    ax_cost.axhline(1.0, color="grey", lw=0.8, ls="--")
    ax_cost.set_ylabel("normalised MPC cost")
    ax_dofs.set_ylabel("mean active DoFs")
    ax_dofs.set_xlabel("removal threshold")
    if series:
        ax_cost.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
