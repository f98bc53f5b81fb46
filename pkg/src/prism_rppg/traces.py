"""RGB trace containers, file formats, window planning, and ground-truth handling.

Trace files come in two shapes:

* CSV: optional ``# fps=<float>`` and ``# t0=<float>`` comment lines, then a
  ``r,g,b`` header row, then one ``<float>,<float>,<float>`` row per frame.
* JSON: an object ``{"fps": <float>, "t0": <float>, "rgb": [[r, g, b], ...]}``
  where ``t0`` is optional.

Ground-truth files are CSV with header ``t,hr`` (instantaneous heart rate in
bpm) or ``t,ppg`` (a raw contact-sensor waveform to be converted to windowed
heart rates with the same spectral estimator used on predictions).
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING

import numpy as np

from .errors import (
    CoverageError,
    ParseError,
    TooShortError,
    ValidationError,
    WindowTooSmallError,
)

if TYPE_CHECKING:
    from .spectral import FrequencyBand, HrSeries

# Plausible human heart-rate range used for the warn-and-keep gate on labels.
HR_GATE_LOW_BPM = 30.0
HR_GATE_HIGH_BPM = 240.0

# Fewer samples per window than this and the spectral peak is meaningless.
MIN_WINDOW_SAMPLES = 32


@dataclass(frozen=True)
class RgbTrace:
    """A uniformly sampled mean-color trace: one (r, g, b) triple per frame."""

    samples: np.ndarray
    fps: float
    t0: float = 0.0

    def __post_init__(self) -> None:
        arr = np.asarray(self.samples, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[1] != 3:
            raise ValidationError(f"samples must have shape (n, 3), got {arr.shape}")
        if arr.shape[0] < 2:
            raise ValidationError("trace needs at least 2 samples")
        if not np.all(np.isfinite(arr)):
            bad = int(np.flatnonzero(~np.isfinite(arr).all(axis=1))[0])
            raise ValidationError(f"non-finite sample at row {bad}")
        if np.any(arr <= 0.0):
            bad = int(np.flatnonzero((arr <= 0.0).any(axis=1))[0])
            raise ValidationError(f"non-positive channel value at row {bad}")
        if not (isinstance(self.fps, (int, float)) and math.isfinite(self.fps) and self.fps > 0):
            raise ValidationError(f"fps must be a positive finite number, got {self.fps!r}")
        if not math.isfinite(self.t0):
            raise ValidationError("t0 must be finite")
        object.__setattr__(self, "samples", arr)
        object.__setattr__(self, "fps", float(self.fps))
        object.__setattr__(self, "t0", float(self.t0))

    def __len__(self) -> int:
        return self.samples.shape[0]

    @property
    def times(self) -> np.ndarray:
        return self.t0 + np.arange(len(self)) / self.fps

    @property
    def duration(self) -> float:
        return len(self) / self.fps

    def channel(self, name: str) -> np.ndarray:
        idx = {"r": 0, "g": 1, "b": 2}[name]
        return self.samples[:, idx]

    def ensure_min_duration(self, window_length: float) -> None:
        """Require room for at least two analysis windows."""
        need = 2 * int(math.floor(window_length * self.fps))
        if len(self) < need:
            raise TooShortError(
                f"trace has {len(self)} samples; needs >= {need} "
                f"for two {window_length:g} s windows at {self.fps:g} fps"
            )


@dataclass(frozen=True)
class WindowPlan:
    """Index arithmetic for fixed-length analysis windows over a trace."""

    n_samples: int
    fps: float
    window_length: float
    hop: float
    t0: float = 0.0
    window_samples: int = field(init=False)
    hop_samples: int = field(init=False)
    starts: np.ndarray = field(init=False)

    def __post_init__(self) -> None:
        if self.window_length <= 0 or self.hop <= 0:
            raise ValidationError("window_length and hop must be positive")
        win = int(math.floor(self.window_length * self.fps))
        hop = int(math.floor(self.hop * self.fps))
        if win < MIN_WINDOW_SAMPLES:
            raise WindowTooSmallError(
                f"{self.window_length:g} s at {self.fps:g} fps gives {win} samples "
                f"per window; minimum is {MIN_WINDOW_SAMPLES}"
            )
        if hop < 1:
            raise WindowTooSmallError("hop shorter than one frame")
        starts = np.arange(0, self.n_samples - win + 1, hop, dtype=np.int64)
        if len(starts) < 2:
            raise TooShortError(
                f"{self.n_samples} samples yield {len(starts)} full window(s); "
                "need at least 2"
            )
        object.__setattr__(self, "window_samples", win)
        object.__setattr__(self, "hop_samples", hop)
        object.__setattr__(self, "starts", starts)

    def __len__(self) -> int:
        return len(self.starts)

    @property
    def midpoint_times(self) -> np.ndarray:
        """Window centers in seconds: t0 + (start + end) / 2 / fps."""
        return self.t0 + (self.starts + self.window_samples / 2.0) / self.fps

    @property
    def start_time(self) -> float:
        return self.t0 + float(self.starts[0]) / self.fps

    @property
    def end_time(self) -> float:
        """Exclusive end of the last window, in seconds."""
        return self.t0 + float(self.starts[-1] + self.window_samples) / self.fps

    def slices(self) -> list[slice]:
        return [slice(int(s), int(s) + self.window_samples) for s in self.starts]


def plan_windows(
    n_samples: int,
    fps: float,
    window_length: float = 10.0,
    hop: float | None = None,
    t0: float = 0.0,
) -> WindowPlan:
    """Build the window plan for a trace of ``n_samples`` frames.

    ``hop`` defaults to ``window_length`` (non-overlapping windows).  A
    trailing partial window is dropped, never padded.
    """
    if hop is None:
        hop = window_length
    return WindowPlan(n_samples=int(n_samples), fps=float(fps),
                      window_length=float(window_length), hop=float(hop), t0=float(t0))


@dataclass(frozen=True)
class GroundTruth:
    """Reference signal: either instantaneous heart rate or a raw PPG waveform."""

    kind: str  # "hr_series" | "raw_ppg"
    times: np.ndarray
    values: np.ndarray
    fps_gt: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("hr_series", "raw_ppg"):
            raise ValidationError(f"unknown ground-truth kind {self.kind!r}")
        t = np.asarray(self.times, dtype=np.float64)
        v = np.asarray(self.values, dtype=np.float64)
        if t.ndim != 1 or v.ndim != 1 or len(t) != len(v):
            raise ValidationError("times and values must be 1-d and equally long")
        if len(t) < 2:
            raise ValidationError("ground truth needs at least 2 rows")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(v))):
            raise ValidationError("ground truth contains non-finite values")
        if np.any(np.diff(t) <= 0):
            raise ValidationError("ground-truth times must be strictly increasing")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)


def _parse_float(text: str, where: str) -> float:
    try:
        return float(text)
    except ValueError as exc:
        raise ParseError(f"expected a number {where}, got {text!r}") from exc


def _read_trace_csv(path: Path) -> tuple[np.ndarray, float | None, float]:
    fps: float | None = None
    t0 = 0.0
    rows: list[tuple[float, float, float]] = []
    header_seen = False
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if "=" in body:
                    key, _, val = body.partition("=")
                    key = key.strip()
                    if key == "fps":
                        fps = _parse_float(val.strip(), f"in '# fps=' on line {lineno}")
                    elif key == "t0":
                        t0 = _parse_float(val.strip(), f"in '# t0=' on line {lineno}")
                continue
            if not header_seen:
                cols = [c.strip().lower() for c in line.split(",")]
                if cols != ["r", "g", "b"]:
                    raise ParseError(
                        f"{path}: expected header 'r,g,b' on line {lineno}, got {line!r}"
                    )
                header_seen = True
                continue
            parts = line.split(",")
            if len(parts) != 3:
                raise ParseError(f"{path}: line {lineno} has {len(parts)} fields, expected 3")
            rows.append(tuple(_parse_float(p, f"on line {lineno}") for p in parts))
    if not header_seen:
        raise ParseError(f"{path}: missing 'r,g,b' header")
    if not rows:
        raise ParseError(f"{path}: no data rows")
    return np.asarray(rows, dtype=np.float64), fps, t0


def _read_trace_json(path: Path) -> tuple[np.ndarray, float | None, float]:
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(obj, dict) or "rgb" not in obj:
        raise ParseError(f"{path}: expected an object with an 'rgb' key")
    rgb = obj["rgb"]
    try:
        arr = np.asarray(rgb, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"{path}: 'rgb' is not a numeric array") from exc
    fps = obj.get("fps")
    if fps is not None and not isinstance(fps, (int, float)):
        raise ParseError(f"{path}: 'fps' must be a number")
    t0 = obj.get("t0", 0.0)
    if not isinstance(t0, (int, float)):
        raise ParseError(f"{path}: 't0' must be a number")
    return arr, (float(fps) if fps is not None else None), float(t0)


def load_trace(
    path: str | Path,
    fps_override: float | None = None,
    window_length: float = 10.0,
) -> RgbTrace:
    """Load a trace file (.csv or .json), validate it, and gate its length.

    ``fps_override`` takes precedence over any rate declared in the file; a
    file with no declared rate requires it.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    suffix = path.suffix.lower()
    if suffix == ".json":
        arr, fps_file, t0 = _read_trace_json(path)
    elif suffix == ".csv":
        arr, fps_file, t0 = _read_trace_csv(path)
    else:
        raise ParseError(f"{path}: unsupported trace extension {suffix!r}")
    fps = fps_override if fps_override is not None else fps_file
    if fps is None:
        raise ParseError(f"{path}: no fps in file and no override given")
    trace = RgbTrace(samples=arr, fps=float(fps), t0=t0)
    trace.ensure_min_duration(window_length)
    return trace


def save_trace(trace: RgbTrace, path: str | Path) -> None:
    """Write a trace in the format implied by the path's extension.

    Floats are written with shortest-roundtrip repr, so load(save(x)) is
    bit-exact.
    """
    path = Path(path)
    if path.suffix.lower() == ".json":
        payload = {
            "fps": trace.fps,
            "t0": trace.t0,
            "rgb": [[float(v) for v in row] for row in trace.samples],
        }
        path.write_text(json.dumps(payload), encoding="utf-8")
        return
    lines = [f"# fps={float(trace.fps)!r}", f"# t0={float(trace.t0)!r}", "r,g,b"]
    for row in trace.samples:
        lines.append(f"{float(row[0])!r},{float(row[1])!r},{float(row[2])!r}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_ground_truth(path: str | Path) -> GroundTruth:
    """Load a ``t,hr`` or ``t,ppg`` CSV.

    Heart-rate labels outside [30, 240] bpm are kept but trigger a warning;
    real exports occasionally contain sensor glitches and dropping rows would
    silently shift alignment.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    kind: str | None = None
    times: list[float] = []
    values: list[float] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if kind is None:
                cols = [c.strip().lower() for c in line.split(",")]
                if cols == ["t", "hr"]:
                    kind = "hr_series"
                elif cols == ["t", "ppg"]:
                    kind = "raw_ppg"
                else:
                    raise ParseError(
                        f"{path}: expected header 't,hr' or 't,ppg', got {line!r}"
                    )
                continue
            parts = line.split(",")
            if len(parts) != 2:
                raise ParseError(f"{path}: line {lineno} has {len(parts)} fields, expected 2")
            times.append(_parse_float(parts[0], f"on line {lineno}"))
            values.append(_parse_float(parts[1], f"on line {lineno}"))
    if kind is None:
        raise ParseError(f"{path}: empty ground-truth file")
    t = np.asarray(times)
    v = np.asarray(values)
    fps_gt: float | None = None
    if kind == "hr_series":
        bad = (v < HR_GATE_LOW_BPM) | (v > HR_GATE_HIGH_BPM)
        if np.any(bad):
            warnings.warn(
                f"{path}: {int(bad.sum())} heart-rate label(s) outside "
                f"[{HR_GATE_LOW_BPM:g}, {HR_GATE_HIGH_BPM:g}] bpm; keeping them",
                stacklevel=2,
            )
    else:
        steps = np.diff(t)
        mean_step = float(np.mean(steps))
        if mean_step <= 0 or np.any(np.abs(steps - mean_step) > 1e-3 * mean_step):
            raise ValidationError(f"{path}: raw PPG requires uniformly sampled times")
        fps_gt = 1.0 / mean_step
    return GroundTruth(kind=kind, times=t, values=v, fps_gt=fps_gt)


def gt_hr_at_midpoints(
    gt: GroundTruth,
    mids: np.ndarray,
    window_length: float,
    band: "FrequencyBand | None" = None,
    n_fft: int = 16384,
    taper: str = "rectangular",
) -> "HrSeries":
    """Resample ground truth onto given window midpoints.

    Instantaneous-rate labels use nearest-time lookup.  Raw PPG is sliced on
    the [mid - w/2, mid + w/2) window spans and run through the same spectral
    peak estimator applied to predictions, so both sides share any estimator
    bias.  Coverage is judged to within one ground-truth time step; labels
    cannot be required to resolve finer than they were sampled.
    """
    from .spectral import FrequencyBand, HrSeries, estimate_hr_window

    mids = np.asarray(mids, dtype=np.float64)
    half = window_length / 2.0
    span_start = float(mids[0] - half)
    span_end = float(mids[-1] + half)
    eps = float(np.median(np.diff(gt.times))) + 1e-12
    if gt.times[0] > span_start + eps or gt.times[-1] < span_end - eps:
        raise CoverageError(
            f"ground truth spans [{gt.times[0]:g}, {gt.times[-1]:g}] s but the "
            f"window plan needs [{span_start:g}, {span_end:g}] s"
        )
    if band is None:
        band = FrequencyBand(0.75, 4.0)
    if gt.kind == "hr_series":
        idx = np.searchsorted(gt.times, mids)
        idx = np.clip(idx, 1, len(gt.times) - 1)
        left_closer = np.abs(mids - gt.times[idx - 1]) <= np.abs(gt.times[idx] - mids)
        nearest = np.where(left_closer, idx - 1, idx)
        bpm = gt.values[nearest]
        return HrSeries(times=mids, bpm=bpm, band=band,
                        provenance={"source": "hr_series"})
    assert gt.fps_gt is not None
    bpm_list: list[float] = []
    for mid in mids:
        w_start = float(mid) - half
        w_end = float(mid) + half
        i0 = int(np.searchsorted(gt.times, w_start - 1e-9, side="left"))
        i1 = int(np.searchsorted(gt.times, w_end - 1e-9, side="left"))
        seg = gt.values[i0:i1]
        if len(seg) < MIN_WINDOW_SAMPLES:
            raise CoverageError(
                f"PPG window [{w_start:g}, {w_end:g}] s holds only {len(seg)} samples"
            )
        hr, _ = estimate_hr_window(seg, gt.fps_gt, band, n_fft=n_fft, taper=taper)
        bpm_list.append(hr)
    return HrSeries(times=mids, bpm=np.asarray(bpm_list), band=band,
                    provenance={"source": "raw_ppg", "fps_gt": gt.fps_gt})


def gt_to_hr_series(
    gt: GroundTruth,
    plan: WindowPlan,
    band: "FrequencyBand | None" = None,
    n_fft: int = 16384,
    taper: str = "rectangular",
) -> "HrSeries":
    """Resample ground truth onto a window plan's midpoints."""
    return gt_hr_at_midpoints(gt, plan.midpoint_times, plan.window_length,
                              band=band, n_fft=n_fft, taper=taper)
