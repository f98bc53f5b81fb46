"""Command-line interface: extract, eval, ablate, synth.

Exit codes: 0 on success, 1 when the pipeline fails on valid inputs, 2 for
usage and input errors.  Failures print a single machine-readable JSON object
to stdout: {"error": {"code": ..., "message": ...}}.  Reports echo the
effective configuration (defaults, then config file, then flags).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import ablation, figures
from .config import PipelineConfig, build_config, load_config_file
from .errors import (
    AlignmentError,
    AllCandidatesFailedError,
    BaselineNonPositiveError,
    CoverageError,
    DegenerateProjectionError,
    EmptyBandError,
    EmptyInputError,
    NumericalError,
    ParseError,
    PrismError,
    SpecError,
    TooFewSamplesError,
    TooFewWindowsError,
    TooShortError,
    ValidationError,
    WindowTooSmallError,
    ZeroPowerError,
)
from .metrics import EvalReport, evaluate
from .optimizer import DualBandResult, GridCell, dual_band_select
from .spectral import FrequencyBand, HrSeries
from .synth import SynthSpec, generate
from .traces import gt_hr_at_midpoints, load_ground_truth, load_trace, plan_windows, save_trace

# (code, exit status) per failure type; unlisted PrismErrors fall back to
# E_PIPELINE / 1.
_ERROR_MAP: list[tuple[type[Exception], str, int]] = [
    (FileNotFoundError, "E_IO", 2),
    (ParseError, "E_PARSE", 2),
    (SpecError, "E_SPEC", 2),
    (EmptyInputError, "E_EMPTY", 2),
    (ValidationError, "E_VALIDATION", 2),
    (TooShortError, "E_TOO_SHORT", 2),
    (WindowTooSmallError, "E_WINDOW", 2),
    (TooFewSamplesError, "E_TOO_SHORT", 2),
    (AlignmentError, "E_ALIGN", 1),
    (CoverageError, "E_COVERAGE", 1),
    (AllCandidatesFailedError, "E_PIPELINE", 1),
    (ZeroPowerError, "E_PIPELINE", 1),
    (EmptyBandError, "E_PIPELINE", 1),
    (TooFewWindowsError, "E_PIPELINE", 1),
    (NumericalError, "E_PIPELINE", 1),
    (BaselineNonPositiveError, "E_PIPELINE", 1),
    (DegenerateProjectionError, "E_PIPELINE", 1),
    (OSError, "E_IO", 2),
]


def _float_list(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(part) for part in text.split(",") if part.strip() != "")
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated floats, got {text!r}") from exc


def _band(text: str) -> tuple[float, float]:
    vals = _float_list(text)
    if len(vals) != 2:
        raise argparse.ArgumentTypeError(f"expected 'low,high', got {text!r}")
    return vals  # type: ignore[return-value]


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, default=None,
                   help="JSON config file; flags override it")
    p.add_argument("--fps", type=float, default=None,
                   help="sampling rate override [Hz]")
    p.add_argument("--window", type=float, default=None,
                   help="analysis window length [s] (default 10)")
    p.add_argument("--hop", type=float, default=None,
                   help="window hop [s] (default: window length)")
    p.add_argument("--nfft", type=int, default=None,
                   help="FFT length, power of two (default 16384)")
    p.add_argument("--k", type=float, default=None,
                   help="weight on temporal variation in the objective (default 1/3)")
    p.add_argument("--alpha-grid", dest="alpha_grid", type=_float_list, default=None,
                   help="comma-separated projection axis candidates")
    p.add_argument("--lambda-grid", dest="lambda_grid", type=_float_list, default=None,
                   help="comma-separated smoothing weight candidates")
    p.add_argument("--mode", type=str, default=None,
                   help="selection mode: full | concentration_only | tv_only | "
                        "fixed_alpha=X | fixed_lambda=X")
    p.add_argument("--band-high", dest="band_high", type=_band, default=None,
                   help="high concentration band 'f_min,f_max' [Hz]")
    p.add_argument("--band-low", dest="band_low", type=_band, default=None,
                   help="low concentration band 'f_min,f_max' [Hz]")
    p.add_argument("--harmonic-tol", dest="harmonic_tol", type=float, default=None,
                   help="relative tolerance of the harmonic rule (default 0.05)")
    p.add_argument("--aggregation", type=str, default=None,
                   choices=("per_window", "per_trace"),
                   help="corpus pooling: per_window | per_trace")
    p.add_argument("--threshold", type=float, default=None,
                   help="hit threshold for accuracy [bpm] (default 5)")
    p.add_argument("--taper", type=str, default=None, choices=("rectangular", "hann"),
                   help="window taper before the FFT (default rectangular)")
    p.add_argument("--seed", type=int, default=None, help="random seed override")
    p.add_argument("--output", type=Path, default=None,
                   help="write the JSON report here (default: stdout)")
    p.add_argument("--figures", type=Path, default=None,
                   help="directory for rendered figures (optional)")


_CONFIG_FLAG_KEYS = (
    "fps", "window", "hop", "nfft", "k", "alpha_grid", "lambda_grid", "mode",
    "band_high", "band_low", "harmonic_tol", "aggregation", "threshold",
    "taper", "seed",
)


def _config_from_args(args: argparse.Namespace) -> PipelineConfig:
    file_values = load_config_file(args.config) if args.config else None
    flag_values = {key: getattr(args, key, None) for key in _CONFIG_FLAG_KEYS}
    return build_config(file_values, flag_values)


def _cells_to_dicts(cells: Sequence[GridCell]) -> list[dict[str, Any]]:
    out = []
    for cell in cells:
        out.append({
            "lambda": cell.lam,
            "alpha": cell.alpha,
            "objective": None if cell.score is None else cell.score.objective,
            "concentration": None if cell.score is None else cell.score.concentration,
            "tv": None if cell.score is None else cell.score.tv,
            "criterion": cell.criterion,
            "error": cell.error,
        })
    return out


def _extract_result_dict(trace_path: Path, config: PipelineConfig,
                         result: DualBandResult) -> dict[str, Any]:
    choice = result.choice
    return {
        "command": "extract",
        "trace": str(trace_path),
        "config": config.to_dict(),
        "selection": {
            "lambda": choice.lam_star,
            "alpha": choice.alpha_star,
            "band": list(choice.band_used.as_tuple()),
            "mode": choice.mode.label(),
            "k": choice.k,
            "objective": choice.score.objective,
            "concentration": choice.score.concentration,
            "tv": choice.score.tv,
            "harmonic_rule_fired": result.harmonic_rule_fired,
            "mean_high_bpm": result.mean_high_bpm,
            "mean_low_bpm": result.mean_low_bpm,
            "high": {"lambda": result.high_choice.lam_star,
                     "alpha": result.high_choice.alpha_star},
            "low": {"lambda": result.low_choice.lam_star,
                    "alpha": result.low_choice.alpha_star},
        },
        "hr": [{"t": float(t), "bpm": float(b)}
               for t, b in zip(result.hr.times, result.hr.bpm)],
        "audit": {
            "high": _cells_to_dicts(result.high_choice.all_scores),
            "low": _cells_to_dicts(result.low_choice.all_scores),
        },
    }


def _emit_json(payload: dict, output: Path | None) -> None:
    text = json.dumps(payload, indent=2)
    if output is None:
        print(text)
    else:
        output.parent.mkdir(parents=True, exist_ok=True)
        output.write_text(text + "\n", encoding="utf-8")
        print(f"wrote {output}")


def _sibling(output: Path, suffix: str) -> Path:
    return output.with_name(output.stem + suffix)


def cmd_extract(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    trace = load_trace(args.trace, config.fps, config.window)
    plan = plan_windows(len(trace), trace.fps, config.window,
                        config.effective_hop(), t0=trace.t0)
    result = dual_band_select(trace, plan, config.bands(), config.grid(),
                              mode=config.ablation_mode(), k=config.k,
                              n_fft=config.nfft, taper=config.taper)
    payload = _extract_result_dict(args.trace, config, result)
    _emit_json(payload, args.output)
    if args.output is not None:
        hr_csv = _sibling(args.output, ".hr.csv")
        lines = ["t,hr"] + [f"{row['t']!r},{row['bpm']!r}" for row in payload["hr"]]
        hr_csv.write_text("\n".join(lines) + "\n", encoding="utf-8")
        print(f"wrote {hr_csv}")
    if args.figures is not None:
        for path in figures.render_extract_figures(payload, args.figures):
            print(f"wrote {path}")
    return 0


def _load_pred_series(path: Path, config: PipelineConfig) -> HrSeries:
    """Predictions come from an extract report (JSON) or a plain t,hr CSV."""
    if path.suffix.lower() == ".json":
        try:
            obj = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}: invalid JSON ({exc})") from exc
        try:
            rows = obj["hr"]
            band = FrequencyBand(*obj["selection"]["band"])
            times = np.asarray([row["t"] for row in rows], dtype=np.float64)
            bpm = np.asarray([row["bpm"] for row in rows], dtype=np.float64)
        except (KeyError, TypeError) as exc:
            raise ParseError(f"{path}: not an extract report") from exc
        return HrSeries(times=times, bpm=bpm, band=band,
                        provenance={"source": str(path)})
    gt = load_ground_truth(path)
    if gt.kind != "hr_series":
        raise ValidationError(f"{path}: predictions must be a t,hr series")
    return HrSeries(times=gt.times, bpm=gt.values,
                    band=FrequencyBand(*config.band_high),
                    provenance={"source": str(path)})


def cmd_eval(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    pred = _load_pred_series(args.pred, config)
    gt = load_ground_truth(args.gt)
    truth = gt_hr_at_midpoints(gt, pred.times, config.window,
                               band=config.bands().high,
                               n_fft=config.nfft, taper=config.taper)
    report: EvalReport = evaluate(pred, truth, threshold=config.threshold)
    payload = {
        "command": "eval",
        "pred": str(args.pred),
        "gt": str(args.gt),
        "config": config.to_dict(),
        **report.to_dict(),
    }
    _emit_json(payload, args.output)
    if args.output is not None:
        rows_csv = _sibling(args.output, ".windows.csv")
        lines = ["t,predicted_bpm,truth_bpm,error_bpm"]
        for w in report.per_window:
            lines.append(f"{float(w.time)!r},{float(w.predicted)!r},"
                         f"{float(w.truth)!r},{float(w.error)!r}")
        rows_csv.write_text("\n".join(lines) + "\n", encoding="utf-8")
        print(f"wrote {rows_csv}")
    if args.figures is not None:
        for path in figures.render_eval_figures(payload, args.figures):
            print(f"wrote {path}")
    return 0


def cmd_ablate(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    pairs = ablation.discover_corpus(args.corpus)
    table = ablation.ablate_corpus(pairs, config, jobs=args.jobs)
    table.pop("_rows", None)
    payload = {
        "command": "ablate",
        "corpus": str(args.corpus),
        "config": config.to_dict(),
        **table,
    }
    _emit_json(payload, args.output)
    if args.output is not None:
        table_csv = _sibling(args.output, ".table.csv")
        lines = ["mode,mae_bpm,rmse_bpm,sd_bpm,pearson_r,acc,mean_lambda,"
                 "mean_alpha,n_traces,n_failed"]
        for row in payload["rows"]:
            m = row["metrics"] or {}
            acc_key = next((k for k in m if k.startswith("acc_at_")), None)
            fields = [
                row["mode"],
                m.get("mae_bpm"), m.get("rmse_bpm"), m.get("sd_bpm"),
                m.get("pearson_r"), (m.get(acc_key) if acc_key else None),
                row["mean_lambda"], row["mean_alpha"],
                row["n_traces"], row["n_failed"],
            ]
            lines.append(",".join("" if f is None else repr(f) if isinstance(f, float)
                                  else str(f) for f in fields))
        table_csv.write_text("\n".join(lines) + "\n", encoding="utf-8")
        print(f"wrote {table_csv}")
    if args.figures is not None:
        for path in figures.render_ablate_figures(payload, args.figures):
            print(f"wrote {path}")
    return 0


def cmd_synth(args: argparse.Namespace) -> int:
    spec = SynthSpec.from_json(args.spec)
    trace, gt = generate(spec, seed=args.seed)
    out: Path = args.output
    out.parent.mkdir(parents=True, exist_ok=True)
    save_trace(trace, out)
    gt_path = out.with_name(out.stem + ".gt.csv")
    lines = ["t,hr"] + [f"{float(t)!r},{float(v)!r}"
                        for t, v in zip(gt.times, gt.values)]
    gt_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"wrote {out}")
    print(f"wrote {gt_path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="prism",
        description="Adaptive rPPG heart-rate extraction from RGB traces.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_extract = sub.add_parser("extract", help="estimate heart rate from a trace")
    p_extract.add_argument("trace", type=Path, help="trace file (.csv or .json)")
    _add_config_flags(p_extract)
    p_extract.set_defaults(func=cmd_extract)

    p_eval = sub.add_parser("eval", help="score predictions against ground truth")
    p_eval.add_argument("pred", type=Path,
                        help="extract report (.json) or t,hr CSV")
    p_eval.add_argument("gt", type=Path, help="ground-truth CSV (t,hr or t,ppg)")
    _add_config_flags(p_eval)
    p_eval.set_defaults(func=cmd_eval)

    p_ablate = sub.add_parser("ablate", help="compare selection modes over a corpus")
    p_ablate.add_argument("corpus", type=Path,
                          help="directory of <name>.csv|.json traces with "
                               "<name>.gt.csv labels")
    p_ablate.add_argument("--jobs", type=int, default=None,
                          help="worker threads (default: one per trace, capped "
                               "at CPU count)")
    _add_config_flags(p_ablate)
    p_ablate.set_defaults(func=cmd_ablate)

    p_synth = sub.add_parser("synth", help="generate a synthetic trace + labels")
    p_synth.add_argument("spec", type=Path, help="synthesis spec (JSON)")
    p_synth.add_argument("--seed", type=int, default=None,
                         help="override the spec's seed")
    p_synth.add_argument("--output", type=Path, required=True,
                         help="trace output path (.csv or .json); labels go to "
                              "<stem>.gt.csv next to it")
    p_synth.set_defaults(func=cmd_synth)
    return parser


def _error_payload(exc: Exception) -> tuple[dict, int]:
    for etype, code, status in _ERROR_MAP:
        if isinstance(exc, etype):
            return {"error": {"code": code, "message": str(exc)}}, status
    if isinstance(exc, PrismError):
        return {"error": {"code": "E_PIPELINE", "message": str(exc)}}, 1
    raise exc


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # noqa: BLE001 - single border for exit-code mapping
        payload, status = _error_payload(exc)
        print(json.dumps(payload, indent=2))
        return status


if __name__ == "__main__":
    sys.exit(main())
