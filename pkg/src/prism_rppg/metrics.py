"""Agreement metrics between predicted and reference heart-rate series."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import AlignmentError, EmptyInputError, ValidationError
from .spectral import HrSeries

DEFAULT_ACC_THRESHOLD_BPM = 5.0


@dataclass(frozen=True)
class PerWindow:
    """One aligned window: prediction, reference, signed error."""

    time: float
    predicted: float
    truth: float
    error: float


@dataclass(frozen=True)
class EvalReport:
    """Summary metrics plus the per-window rows they were computed from.

    ``pearson_r`` is None when either series is constant; correlation is
    undefined there and reporting 0 would punish a perfectly steady subject.
    """

    mae: float
    rmse: float
    sd: float
    pearson_r: float | None
    acc_at: float
    threshold: float
    n_windows: int
    per_window: tuple[PerWindow, ...]

    def to_dict(self) -> dict:
        return {
            "mae_bpm": self.mae,
            "rmse_bpm": self.rmse,
            "sd_bpm": self.sd,
            "pearson_r": self.pearson_r,
            f"acc_at_{self.threshold:g}_bpm": self.acc_at,
            "threshold_bpm": self.threshold,
            "n_windows": self.n_windows,
            "per_window": [
                {"t": w.time, "predicted_bpm": w.predicted,
                 "truth_bpm": w.truth, "error_bpm": w.error}
                for w in self.per_window
            ],
        }


def _metrics_from_rows(rows: Sequence[PerWindow], threshold: float) -> EvalReport:
    errors = np.asarray([w.error for w in rows])
    preds = np.asarray([w.predicted for w in rows])
    truths = np.asarray([w.truth for w in rows])
    mae = float(np.mean(np.abs(errors)))
    rmse = float(np.sqrt(np.mean(errors**2)))
    sd = float(np.std(errors))  # population: sd^2 == rmse^2 - mean(error)^2
    if float(np.std(preds)) == 0.0 or float(np.std(truths)) == 0.0:
        pearson: float | None = None
    else:
        pearson = float(np.corrcoef(preds, truths)[0, 1])
        if not np.isfinite(pearson):
            pearson = None
    acc = float(np.mean(np.abs(errors) <= threshold))
    return EvalReport(mae=mae, rmse=rmse, sd=sd, pearson_r=pearson, acc_at=acc,
                      threshold=threshold, n_windows=len(rows),
                      per_window=tuple(rows))


def evaluate(
    pred: HrSeries,
    truth: HrSeries,
    threshold: float = DEFAULT_ACC_THRESHOLD_BPM,
) -> EvalReport:
    """Compare two aligned heart-rate series window by window."""
    if not (np.isfinite(threshold) and threshold > 0):
        raise ValidationError(f"threshold must be positive, got {threshold!r}")
    if len(pred) == 0 or len(truth) == 0:
        raise EmptyInputError("cannot evaluate empty series")
    if len(pred) != len(truth):
        raise AlignmentError(
            f"prediction has {len(pred)} windows but reference has {len(truth)}"
        )
    if len(pred) >= 2:
        tol = 0.5 * float(np.median(np.diff(pred.times)))
    else:
        tol = 1e-6
    gaps = np.abs(pred.times - truth.times)
    if np.any(gaps > tol):
        worst = int(np.argmax(gaps))
        raise AlignmentError(
            f"window midpoints diverge at index {worst}: "
            f"{pred.times[worst]:g} s vs {truth.times[worst]:g} s (tol {tol:g} s)"
        )
    rows = [
        PerWindow(time=float(t), predicted=float(p), truth=float(g),
                  error=float(p - g))
        for t, p, g in zip(pred.times, pred.bpm, truth.bpm)
    ]
    return _metrics_from_rows(rows, threshold)


def aggregate(reports: Sequence[EvalReport], weighting: str = "per_window") -> EvalReport:
    """Combine per-trace reports into a corpus-level report.

    ``per_window`` pools every window as if the corpus were one long
    recording, so long traces weigh more.  ``per_trace`` averages each
    trace's summary metrics with equal weight; its rmse/sd are means of
    per-trace values, not pooled moments.
    """
    if weighting not in ("per_window", "per_trace"):
        raise ValidationError(f"unknown weighting {weighting!r}")
    reports = list(reports)
    if not reports:
        raise EmptyInputError("no reports to aggregate")
    thresholds = {r.threshold for r in reports}
    if len(thresholds) != 1:
        raise ValidationError(f"mixed thresholds {sorted(thresholds)}; cannot pool")
    threshold = thresholds.pop()
    pooled_rows = [w for r in reports for w in r.per_window]
    if weighting == "per_window":
        return _metrics_from_rows(pooled_rows, threshold)
    rs = [r.pearson_r for r in reports if r.pearson_r is not None]
    return EvalReport(
        mae=float(np.mean([r.mae for r in reports])),
        rmse=float(np.mean([r.rmse for r in reports])),
        sd=float(np.mean([r.sd for r in reports])),
        pearson_r=(float(np.mean(rs)) if rs else None),
        acc_at=float(np.mean([r.acc_at for r in reports])),
        threshold=threshold,
        n_windows=sum(r.n_windows for r in reports),
        per_window=tuple(pooled_rows),
    )
