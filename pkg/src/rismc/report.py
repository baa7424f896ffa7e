"""Figure rendering for completed runs.

Consumes only the results CSV (the same file any external plotting tool
would read) and writes PNG figures next to it: sum rate and MSE versus the
sweep variable, one line per baseline with a shaded +/- one standard
deviation band across trials.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

_X_LABELS = {
    "power": "transmit power (dBm)",
    "elements": "RIS elements M",
    "users": "users K",
}

_STYLE = {
    "proposed": dict(color="C0", marker="o"),
    "fixed_mc": dict(color="C1", marker="s"),
    "conventional": dict(color="C2", marker="^"),
}


def load_results_csv(path):
    """Rows of the results CSV as dicts with numeric fields parsed."""
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            for key in ("sweep_value", "mean_sum_rate", "std_sum_rate", "mean_mse"):
                row[key] = float(row[key])
            rows.append(row)
    return rows


def _series(rows, ykey):
    by_baseline = {}
    for row in rows:
        by_baseline.setdefault(row["baseline"], []).append(row)
    for baseline, items in by_baseline.items():
        items.sort(key=lambda r: r["sweep_value"])
        xs = [r["sweep_value"] for r in items]
        ys = [r[ykey] for r in items]
        stds = [r["std_sum_rate"] for r in items]
        yield baseline, xs, ys, stds


def render_figures(csv_path, out_dir=None) -> list[Path]:
    """Render the sum-rate and MSE figures for one results CSV."""
    csv_path = Path(csv_path)
    out = Path(out_dir) if out_dir is not None else csv_path.parent / "figures"
    out.mkdir(parents=True, exist_ok=True)
    rows = load_results_csv(csv_path)
    if not rows:
        return []
    sweep = rows[0]["sweep_name"]
    mode = rows[0]["mode"]
    xlabel = _X_LABELS.get(sweep, sweep)
    written = []

    fig, ax = plt.subplots(figsize=(5.5, 4.0))
    for baseline, xs, ys, stds in _series(rows, "mean_sum_rate"):
        style = _STYLE.get(baseline, {})
        ax.plot(xs, ys, label=baseline, **style)
        lo = [y - s for y, s in zip(ys, stds)]
        hi = [y + s for y, s in zip(ys, stds)]
        ax.fill_between(xs, lo, hi, alpha=0.15, color=style.get("color"))
    ax.set_xlabel(xlabel)
    ax.set_ylabel("sum rate (bits/s/Hz)")
    ax.set_title(f"{mode} RIS, sweep over {sweep}")
    ax.grid(alpha=0.3)
    ax.legend()
    fig.tight_layout()
    path = out / f"sum_rate_vs_{sweep}.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    written.append(path)

    fig, ax = plt.subplots(figsize=(5.5, 4.0))
    for baseline, xs, ys, _ in _series(rows, "mean_mse"):
        ax.semilogy(xs, ys, label=baseline, **_STYLE.get(baseline, {}))
    ax.set_xlabel(xlabel)
    ax.set_ylabel("mean total MSE")
    ax.set_title(f"{mode} RIS, sweep over {sweep}")
    ax.grid(alpha=0.3, which="both")
    ax.legend()
    fig.tight_layout()
    path = out / f"mse_vs_{sweep}.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    written.append(path)
    return written
