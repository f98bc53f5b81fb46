"""Corpus-level comparison of selection modes.

Given a directory of trace/label pairs, run the pipeline under each mode and
table the resulting error metrics.  The fixed-parameter rows report the best
single value found by scanning the configured grid, which is the strongest
baseline a non-adaptive variant could claim.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .config import PipelineConfig
from .errors import EmptyInputError, PrismError
from .metrics import EvalReport, aggregate, evaluate
from .optimizer import AblationMode, DualBandResult, EvalCache, NormCache, dual_band_select
from .traces import GroundTruth, RgbTrace, gt_to_hr_series, load_ground_truth, load_trace, plan_windows

GT_SUFFIX = ".gt.csv"


def discover_corpus(directory: str | Path) -> list[tuple[Path, Path]]:
    """Pair every trace file in a directory with its ``<stem>.gt.csv`` labels."""
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(directory)
    pairs: list[tuple[Path, Path]] = []
    for entry in sorted(directory.iterdir()):
        if not entry.is_file() or entry.name.endswith(GT_SUFFIX):
            continue
        if entry.suffix.lower() not in (".csv", ".json"):
            continue
        gt_path = entry.with_name(entry.name[: -len(entry.suffix)] + GT_SUFFIX)
        if gt_path.exists():
            pairs.append((entry, gt_path))
    if not pairs:
        raise EmptyInputError(
            f"{directory}: no trace/label pairs (expected <name>.csv|.json "
            f"with <name>{GT_SUFFIX})"
        )
    return pairs


@dataclass(frozen=True)
class TraceOutcome:
    """One trace under one mode: a report, or the error that stopped it."""

    name: str
    report: EvalReport | None
    lam_star: float | None
    alpha_star: float | None
    error: str | None = None


@dataclass(frozen=True)
class AblationRow:
    """One mode's corpus-level summary."""

    mode: str
    report: EvalReport | None
    mean_lam: float | None
    mean_alpha: float | None
    n_traces: int
    n_failed: int
    outcomes: tuple[TraceOutcome, ...]

    def to_dict(self) -> dict:
        summary = None
        if self.report is not None:
            summary = {key: val for key, val in self.report.to_dict().items()
                       if key != "per_window"}
        return {
            "mode": self.mode,
            "metrics": summary,
            "mean_lambda": self.mean_lam,
            "mean_alpha": self.mean_alpha,
            "n_traces": self.n_traces,
            "n_failed": self.n_failed,
            "failures": [
                {"trace": o.name, "error": o.error}
                for o in self.outcomes if o.error
            ],
        }


@dataclass
class _LoadedTrace:
    name: str
    trace: RgbTrace
    gt: GroundTruth


def _run_mode_on_trace(
    item: _LoadedTrace,
    mode: AblationMode,
    config: PipelineConfig,
    norm_cache: NormCache,
    eval_cache: EvalCache,
) -> TraceOutcome:
    try:
        plan = plan_windows(len(item.trace), item.trace.fps, config.window,
                            config.effective_hop(), t0=item.trace.t0)
        result: DualBandResult = dual_band_select(
            item.trace, plan, config.bands(), config.grid(), mode=mode,
            k=config.k, n_fft=config.nfft, taper=config.taper,
            _norm_cache=norm_cache, _eval_cache=eval_cache)
        truth = gt_to_hr_series(item.gt, plan, band=config.bands().high,
                                n_fft=config.nfft, taper=config.taper)
        report = evaluate(result.hr, truth, threshold=config.threshold)
        return TraceOutcome(name=item.name, report=report,
                            lam_star=result.choice.lam_star,
                            alpha_star=result.choice.alpha_star)
    except PrismError as exc:
        return TraceOutcome(name=item.name, report=None, lam_star=None,
                            alpha_star=None, error=str(exc))


def _summarize(mode_label: str, outcomes: Sequence[TraceOutcome],
               config: PipelineConfig) -> AblationRow:
    ok = [o for o in outcomes if o.report is not None]
    report = None
    if ok:
        report = aggregate([o.report for o in ok], weighting=config.aggregation)
    lams = [o.lam_star for o in ok if o.lam_star is not None]
    alphas = [o.alpha_star for o in ok if o.alpha_star is not None]
    return AblationRow(
        mode=mode_label,
        report=report,
        mean_lam=(float(np.mean(lams)) if lams else None),
        mean_alpha=(float(np.mean(alphas)) if alphas else None),
        n_traces=len(outcomes),
        n_failed=len(outcomes) - len(ok),
        outcomes=tuple(outcomes),
    )


def ablate_corpus(
    pairs: Sequence[tuple[Path, Path]],
    config: PipelineConfig,
    jobs: int | None = None,
) -> dict:
    """Run full, best-fixed-alpha, best-fixed-lambda, concentration-only, and
    variation-only selection over a corpus.

    Traces run in a thread pool (scoring is numpy-bound and side-effect free);
    results are reduced in input order, so the table is deterministic
    regardless of scheduling.  A trace that fails under one mode is recorded
    and the corpus run continues.
    """
    if not pairs:
        raise EmptyInputError("empty corpus")
    loaded = [
        _LoadedTrace(name=trace_path.name,
                     trace=load_trace(trace_path, config.fps, config.window),
                     gt=load_ground_truth(gt_path))
        for trace_path, gt_path in pairs
    ]
    # One cache pair per trace, shared across every mode: cell evaluations
    # are identical between modes, only the selection differs.
    caches: list[tuple[NormCache, EvalCache]] = [({}, {}) for _ in loaded]

    def run_mode(mode: AblationMode) -> list[TraceOutcome]:
        workers = jobs or min(len(loaded), os.cpu_count() or 1)
        with ThreadPoolExecutor(max_workers=max(workers, 1)) as pool:
            futures = [
                pool.submit(_run_mode_on_trace, item, mode, config,
                            caches[i][0], caches[i][1])
                for i, item in enumerate(loaded)
            ]
            return [f.result() for f in futures]

    grid = config.grid()
    rows: list[AblationRow] = []
    scans: dict[str, list[dict]] = {"fixed_alpha": [], "fixed_lambda": []}

    rows.append(_summarize("full", run_mode(AblationMode()), config))

    def best_fixed(kind: str, values: Sequence[float]) -> AblationRow:
        candidates: list[AblationRow] = []
        for value in values:
            mode = AblationMode(kind=kind, value=value)
            row = _summarize(mode.label(), run_mode(mode), config)
            scans[kind].append({"value": value, "mae_bpm":
                                (None if row.report is None else row.report.mae)})
            candidates.append(row)
        best = min(candidates,
                   key=lambda r: r.report.mae if r.report is not None else float("inf"))
        return AblationRow(mode=f"best_{best.mode}", report=best.report,
                           mean_lam=best.mean_lam, mean_alpha=best.mean_alpha,
                           n_traces=best.n_traces, n_failed=best.n_failed,
                           outcomes=best.outcomes)

    rows.append(best_fixed("fixed_alpha", grid.alphas))
    rows.append(best_fixed("fixed_lambda", grid.lams))
    rows.append(_summarize("concentration_only",
                           run_mode(AblationMode(kind="concentration_only")), config))
    rows.append(_summarize("tv_only", run_mode(AblationMode(kind="tv_only")), config))

    return {
        "rows": [row.to_dict() for row in rows],
        "scans": scans,
        "n_traces": len(loaded),
        "traces": [item.name for item in loaded],
        "_rows": rows,  # full objects for in-process callers; stripped for JSON
    }
