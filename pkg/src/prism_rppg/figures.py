"""Matplotlib rendering of extraction, evaluation, and ablation reports.

Everything here draws from the same dictionaries the CLI writes to disk, so a
figure can always be regenerated from a saved report.  The Agg backend is
forced because these functions run headless.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

GRID_KW = {"alpha": 0.3, "linewidth": 0.6}
DPI = 150


def _finish(fig: "plt.Figure", path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path, dpi=DPI)
    plt.close(fig)
    return path


def render_extract_figures(result: dict, out_dir: str | Path) -> list[Path]:
    """Heart-rate trajectory plus the objective surface over the search grid."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    hr_rows = result["hr"]
    t = [row["t"] for row in hr_rows]
    bpm = [row["bpm"] for row in hr_rows]
    sel = result["selection"]
    fig, ax = plt.subplots(figsize=(8, 3.5))
    ax.plot(t, bpm, marker="o", color="tab:red", label="estimated")
    ax.set_xlabel("time [s]")
    ax.set_ylabel("heart rate [bpm]")
    ax.set_title(
        f"lam={sel['lambda']:g}, alpha={sel['alpha']:g}, "
        f"band=[{sel['band'][0]:g}, {sel['band'][1]:g}] Hz"
    )
    ax.grid(True, **GRID_KW)
    ax.legend(loc="best")
    written.append(_finish(fig, out_dir / "hr_series.png"))

    audit = result.get("audit", {})
    panels = [(name, audit[name]) for name in ("high", "low") if audit.get(name)]
    if panels:
        fig, axes = plt.subplots(1, len(panels), figsize=(5.2 * len(panels), 4),
                                 squeeze=False)
        for ax, (name, cells) in zip(axes[0], panels):
            lams = sorted({c["lambda"] for c in cells})
            alphas = sorted({c["alpha"] for c in cells})
            surface = np.full((len(lams), len(alphas)), np.nan)
            for cell in cells:
                if cell.get("objective") is None:
                    continue
                i = lams.index(cell["lambda"])
                j = alphas.index(cell["alpha"])
                surface[i, j] = cell["objective"]
            im = ax.imshow(surface, origin="lower", aspect="auto", cmap="viridis")
            ax.set_xticks(range(len(alphas)), [f"{a:g}" for a in alphas])
            ax.set_yticks(range(len(lams)), [f"{l:g}" for l in lams])
            ax.set_xlabel("alpha")
            ax.set_ylabel("lambda [s^3]")
            ax.set_title(f"{name} band objective")
            fig.colorbar(im, ax=ax, shrink=0.85)
        written.append(_finish(fig, out_dir / "objective_grid.png"))
    return written


def render_eval_figures(report: dict, out_dir: str | Path) -> list[Path]:
    """Prediction against reference over time, and the error histogram."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = report["per_window"]
    t = [row["t"] for row in rows]
    pred = [row["predicted_bpm"] for row in rows]
    truth = [row["truth_bpm"] for row in rows]
    err = [row["error_bpm"] for row in rows]

    fig, ax = plt.subplots(figsize=(8, 3.5))
    ax.plot(t, truth, marker=".", color="tab:blue", label="reference")
    ax.plot(t, pred, marker="o", linestyle="--", color="tab:red", label="estimated")
    ax.set_xlabel("time [s]")
    ax.set_ylabel("heart rate [bpm]")
    ax.set_title(f"MAE {report['mae_bpm']:.2f} bpm, RMSE {report['rmse_bpm']:.2f} bpm")
    ax.grid(True, **GRID_KW)
    ax.legend(loc="best")
    first = _finish(fig, out_dir / "hr_compare.png")

    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.hist(err, bins=min(30, max(5, len(err))), color="tab:gray", edgecolor="black")
    ax.axvline(0.0, color="tab:red", linewidth=1)
    ax.set_xlabel("error [bpm]")
    ax.set_ylabel("windows")
    ax.set_title(f"threshold {report['threshold_bpm']:g} bpm, "
                 f"hit rate {100.0 * report[_acc_key(report)]:.1f}%")
    ax.grid(True, **GRID_KW)
    second = _finish(fig, out_dir / "error_hist.png")
    return [first, second]


def _acc_key(report: dict) -> str:
    for key in report:
        if key.startswith("acc_at_"):
            return key
    raise KeyError("report has no accuracy field")


def render_ablate_figures(table: dict, out_dir: str | Path) -> list[Path]:
    """Bar chart of corpus MAE per selection mode."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = [r for r in table["rows"] if r.get("metrics")]
    labels = [r["mode"] for r in rows]
    maes = [r["metrics"]["mae_bpm"] for r in rows]
    fig, ax = plt.subplots(figsize=(1.6 * max(4, len(rows)), 3.8))
    bars = ax.bar(labels, maes, color="tab:purple")
    ax.bar_label(bars, fmt="%.2f")
    ax.set_ylabel("MAE [bpm]")
    ax.set_title("selection mode comparison")
    ax.grid(True, axis="y", **GRID_KW)
    plt.setp(ax.get_xticklabels(), rotation=20, ha="right")
    return [_finish(fig, out_dir / "ablation_mae.png")]
