"""Synthetic RGB traces with known heart-rate trajectories.

The generator builds each channel as

    base * drift(t) * (1 + a * sin(phase) + h * a * sin(2 * phase) + noise)

where phase is the running integral of the instantaneous pulse rate.  Drift
components multiply together per channel, so slow gain changes compose the
way real illumination does.  With ``additive_drift`` the drift is added to
the pulse term instead, a deliberate mismatch probe for the divide-by-
baseline normalization.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .errors import SpecError, TooShortError
from .traces import GroundTruth, RgbTrace, plan_windows

HR_MIN_BPM = 30.0
HR_MAX_BPM = 240.0

DEFAULT_BASE = (150.0, 110.0, 90.0)
DEFAULT_PULSE_AMPLITUDE = (0.004, 0.010, 0.005)

_CHANNELS = ("r", "g", "b")


def _per_channel(value: Any, name: str, default: tuple[float, float, float]) -> tuple[float, float, float]:
    if value is None:
        return default
    if isinstance(value, Mapping):
        missing = [c for c in _CHANNELS if c not in value]
        if missing:
            raise SpecError(f"{name} is missing channel(s) {missing}")
        vals = tuple(float(value[c]) for c in _CHANNELS)
    elif isinstance(value, Sequence) and len(value) == 3:
        vals = tuple(float(v) for v in value)
    else:
        raise SpecError(f"{name} must be a 3-sequence or an r/g/b mapping")
    if not all(math.isfinite(v) for v in vals):
        raise SpecError(f"{name} contains non-finite values")
    return vals  # type: ignore[return-value]


@dataclass(frozen=True)
class HrTrajectory:
    """Instantaneous pulse rate over time: constant, chirp, or piecewise linear."""

    kind: str
    params: dict[str, Any]

    @classmethod
    def from_spec(cls, obj: Any) -> "HrTrajectory":
        if isinstance(obj, (int, float)):
            obj = {"kind": "constant", "bpm": float(obj)}
        if not isinstance(obj, Mapping) or "kind" not in obj:
            raise SpecError("hr must be a number or an object with a 'kind'")
        kind = obj["kind"]
        if kind == "constant":
            if "bpm" not in obj:
                raise SpecError("constant hr needs 'bpm'")
            return cls(kind, {"bpm": float(obj["bpm"])})
        if kind == "chirp":
            for key in ("start_bpm", "end_bpm"):
                if key not in obj:
                    raise SpecError(f"chirp hr needs '{key}'")
            return cls(kind, {"start_bpm": float(obj["start_bpm"]),
                              "end_bpm": float(obj["end_bpm"])})
        if kind == "piecewise":
            pts = obj.get("points")
            if not isinstance(pts, Sequence) or len(pts) < 2:
                raise SpecError("piecewise hr needs >= 2 [t, bpm] points")
            times = [float(p[0]) for p in pts]
            bpms = [float(p[1]) for p in pts]
            if any(t1 <= t0 for t0, t1 in zip(times, times[1:])):
                raise SpecError("piecewise hr times must be strictly increasing")
            return cls(kind, {"times": times, "bpms": bpms})
        raise SpecError(f"unknown hr kind {kind!r}")

    def bpm_at(self, t: np.ndarray, duration: float) -> np.ndarray:
        t = np.asarray(t, dtype=np.float64)
        if self.kind == "constant":
            return np.full_like(t, self.params["bpm"])
        if self.kind == "chirp":
            f0, f1 = self.params["start_bpm"], self.params["end_bpm"]
            return f0 + (f1 - f0) * (t / duration)
        return np.interp(t, self.params["times"], self.params["bpms"])

    def phase_at(self, t: np.ndarray, duration: float) -> np.ndarray:
        """2 * pi * integral of bpm/60; closed form where the kind allows."""
        t = np.asarray(t, dtype=np.float64)
        if self.kind == "constant":
            return 2.0 * np.pi * (self.params["bpm"] / 60.0) * t
        if self.kind == "chirp":
            f0 = self.params["start_bpm"] / 60.0
            f1 = self.params["end_bpm"] / 60.0
            return 2.0 * np.pi * (f0 * t + (f1 - f0) * t**2 / (2.0 * duration))
        rate = self.bpm_at(t, duration) / 60.0
        return 2.0 * np.pi * cumulative_trapezoid(rate, t, initial=0.0)

    def to_dict(self) -> dict[str, Any]:
        if self.kind == "piecewise":
            return {"kind": "piecewise",
                    "points": [[t, b] for t, b in
                               zip(self.params["times"], self.params["bpms"])]}
        return {"kind": self.kind, **self.params}


def _drift_component(comp: Mapping[str, Any], t: np.ndarray) -> np.ndarray:
    kind = comp.get("kind")
    if kind == "exponential":
        return np.exp(float(comp.get("rate", 0.0)) * t)
    if kind == "sinusoid":
        amp = float(comp.get("amplitude", 0.0))
        freq = float(comp.get("freq_hz", 0.0))
        phase = float(comp.get("phase", 0.0))
        return 1.0 + amp * np.sin(2.0 * np.pi * freq * t + phase)
    if kind == "regime_switch":
        ts = float(comp.get("time_s", 0.0))
        factor = float(comp.get("factor", 1.0))
        ramp = float(comp.get("ramp_s", 0.0))
        if ramp <= 0:
            return np.where(t < ts, 1.0, factor)
        frac = np.clip((t - ts) / ramp, 0.0, 1.0)
        return 1.0 + (factor - 1.0) * frac
    raise SpecError(f"unknown drift kind {kind!r}")


def _drift_channel(components: Any, t: np.ndarray, channel: str) -> np.ndarray:
    if components is None:
        return np.ones_like(t)
    if isinstance(components, Mapping):
        components = [components]
    if not isinstance(components, Sequence):
        raise SpecError(f"drift for channel {channel!r} must be a component "
                        "object or a list of them")
    out = np.ones_like(t)
    for comp in components:
        if not isinstance(comp, Mapping):
            raise SpecError(f"drift component for channel {channel!r} must be an object")
        out = out * _drift_component(comp, t)
    if np.any(out <= 0):
        raise SpecError(f"drift for channel {channel!r} is not strictly positive")
    return out


@dataclass(frozen=True)
class SynthSpec:
    """Everything needed to deterministically regenerate one trace."""

    duration: float
    fps: float
    hr: HrTrajectory
    pulse_amplitude: tuple[float, float, float] = DEFAULT_PULSE_AMPLITUDE
    base: tuple[float, float, float] = DEFAULT_BASE
    harmonic_ratio: float = 0.0
    drift: dict[str, Any] = field(default_factory=dict)
    noise_sigma: float = 0.0
    additive_drift: bool = False
    seed: int = 0
    window_length: float = 10.0
    hop: float | None = None

    def __post_init__(self) -> None:
        if not (math.isfinite(self.duration) and self.duration > 0):
            raise SpecError(f"duration must be positive, got {self.duration!r}")
        if not (math.isfinite(self.fps) and self.fps > 0):
            raise SpecError(f"fps must be positive, got {self.fps!r}")
        if self.harmonic_ratio < 0 or not math.isfinite(self.harmonic_ratio):
            raise SpecError("harmonic_ratio must be a non-negative finite number")
        if self.noise_sigma < 0 or not math.isfinite(self.noise_sigma):
            raise SpecError("noise_sigma must be a non-negative finite number")
        if any(a < 0 for a in self.pulse_amplitude):
            raise SpecError("pulse amplitudes must be non-negative")
        if any(v <= 0 for v in self.base):
            raise SpecError("base levels must be strictly positive")

    @classmethod
    def from_dict(cls, obj: Mapping[str, Any]) -> "SynthSpec":
        if not isinstance(obj, Mapping):
            raise SpecError("spec must be a JSON object")
        if "duration" not in obj or "fps" not in obj or "hr" not in obj:
            raise SpecError("spec needs 'duration', 'fps', and 'hr'")
        known = {"duration", "fps", "hr", "pulse_amplitude", "base",
                 "harmonic_ratio", "drift", "noise_sigma", "additive_drift",
                 "seed", "window_length", "hop"}
        unknown = set(obj) - known
        if unknown:
            raise SpecError(f"unknown spec field(s): {sorted(unknown)}")
        drift = obj.get("drift", {})
        if drift and not isinstance(drift, Mapping):
            raise SpecError("drift must map channel names to components")
        if isinstance(drift, Mapping):
            bad = set(drift) - set(_CHANNELS)
            if bad:
                raise SpecError(f"drift has unknown channel(s): {sorted(bad)}")
        try:
            duration = float(obj["duration"])
            fps = float(obj["fps"])
        except (TypeError, ValueError) as exc:
            raise SpecError("duration and fps must be numbers") from exc
        return cls(
            duration=duration,
            fps=fps,
            hr=HrTrajectory.from_spec(obj["hr"]),
            pulse_amplitude=_per_channel(obj.get("pulse_amplitude"),
                                         "pulse_amplitude", DEFAULT_PULSE_AMPLITUDE),
            base=_per_channel(obj.get("base"), "base", DEFAULT_BASE),
            harmonic_ratio=float(obj.get("harmonic_ratio", 0.0)),
            drift=dict(drift),
            noise_sigma=float(obj.get("noise_sigma", 0.0)),
            additive_drift=bool(obj.get("additive_drift", False)),
            seed=int(obj.get("seed", 0)),
            window_length=float(obj.get("window_length", 10.0)),
            hop=(float(obj["hop"]) if obj.get("hop") is not None else None),
        )

    @classmethod
    def from_json(cls, path: str | Path) -> "SynthSpec":
        try:
            obj = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise SpecError(f"{path}: invalid JSON ({exc})") from exc
        return cls.from_dict(obj)

    def to_dict(self) -> dict[str, Any]:
        return {
            "duration": self.duration,
            "fps": self.fps,
            "hr": self.hr.to_dict(),
            "pulse_amplitude": list(self.pulse_amplitude),
            "base": list(self.base),
            "harmonic_ratio": self.harmonic_ratio,
            "drift": self.drift,
            "noise_sigma": self.noise_sigma,
            "additive_drift": self.additive_drift,
            "seed": self.seed,
            "window_length": self.window_length,
            "hop": self.hop,
        }


def generate(spec: SynthSpec, seed: int | None = None) -> tuple[RgbTrace, GroundTruth]:
    """Render a spec into a trace and its midpoint-aligned heart-rate labels.

    ``seed`` overrides the spec's own seed.  Output is bit-for-bit
    deterministic for a given (spec, seed) pair.
    """
    n = int(math.floor(spec.duration * spec.fps))
    if n < 2:
        raise SpecError("duration too short for even two frames")
    t = np.arange(n) / spec.fps
    bpm = spec.hr.bpm_at(t, spec.duration)
    if np.any(bpm < HR_MIN_BPM) or np.any(bpm > HR_MAX_BPM):
        raise SpecError(
            f"hr trajectory leaves [{HR_MIN_BPM:g}, {HR_MAX_BPM:g}] bpm "
            f"(range [{bpm.min():g}, {bpm.max():g}])"
        )
    phase = spec.hr.phase_at(t, spec.duration)
    rng = np.random.default_rng(spec.seed if seed is None else seed)

    columns = []
    for idx, name in enumerate(_CHANNELS):
        a = spec.pulse_amplitude[idx]
        pulse = a * np.sin(phase) + spec.harmonic_ratio * a * np.sin(2.0 * phase)
        noise = rng.normal(0.0, spec.noise_sigma, n) if spec.noise_sigma > 0 else 0.0
        drift = _drift_channel(spec.drift.get(name), t, name)
        if spec.additive_drift:
            col = spec.base[idx] * (drift + pulse + noise)
        else:
            col = spec.base[idx] * drift * (1.0 + pulse + noise)
        columns.append(col)
    samples = np.column_stack(columns)
    if np.any(samples <= 0):
        raise SpecError(
            "generated channels are not strictly positive; reduce noise_sigma, "
            "pulse amplitudes, or drift swings"
        )
    trace = RgbTrace(samples=samples, fps=spec.fps, t0=0.0)
    try:
        plan = plan_windows(n, spec.fps, spec.window_length, spec.hop)
    except TooShortError as exc:
        raise SpecError(f"duration does not cover two analysis windows: {exc}") from exc
    mids = plan.midpoint_times
    gt = GroundTruth(kind="hr_series", times=mids,
                     values=spec.hr.bpm_at(mids, spec.duration))
    return trace, gt
