"""Color-axis projections that collapse normalized RGB to a single pulse signal."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .detrend import NormalizedTrace
from .errors import DegenerateProjectionError, ValidationError
from .traces import WindowPlan


@dataclass(frozen=True)
class PulseSignal:
    """A 1-d pulse waveform plus enough provenance to reproduce it."""

    samples: np.ndarray
    fps: float
    provenance: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        arr = np.asarray(self.samples, dtype=np.float64)
        if arr.ndim != 1:
            raise ValidationError("pulse signal must be 1-d")
        if not np.all(np.isfinite(arr)):
            raise ValidationError("pulse signal contains non-finite values")
        object.__setattr__(self, "samples", arr)

    def __len__(self) -> int:
        return len(self.samples)


def prism_project(norm: NormalizedTrace, alpha: float) -> PulseSignal:
    """Project onto g - (alpha * b + (1 - alpha) * r).

    ``alpha`` slides the reference between the red axis (alpha = 0) and the
    blue axis (alpha = 1); the green channel always enters with weight 1, so
    any component common to all three channels cancels exactly.
    """
    if not (np.isfinite(alpha) and -1.0 <= alpha <= 1.0):
        raise ValidationError(f"alpha must lie in [-1, 1], got {alpha!r}")
    s = norm.g_hat - (alpha * norm.b_hat + (1.0 - alpha) * norm.r_hat)
    return PulseSignal(samples=s, fps=norm.fps,
                       provenance={"method": "prism", "alpha": float(alpha),
                                   "lam": norm.lam})


def green_project(norm: NormalizedTrace) -> PulseSignal:
    """Mean-removed green channel; the classic single-channel baseline."""
    g = norm.g_hat
    return PulseSignal(samples=g - float(np.mean(g)), fps=norm.fps,
                       provenance={"method": "green", "lam": norm.lam})


def _pos_combine(r: np.ndarray, g: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, float]:
    s1 = g - b
    s2 = g + b - 2.0 * r
    sd2 = float(np.std(s2))
    if sd2 == 0.0:
        raise DegenerateProjectionError("pos: second chrominance axis has zero variance")
    gain = float(np.std(s1)) / sd2
    return s1 + gain * s2, gain


def pos_project(norm: NormalizedTrace) -> PulseSignal:
    """Plane-orthogonal-to-skin projection with a single full-span gain.

    Algebraically this equals (1 + gain) times the alpha projection at
    alpha = (1 - gain) / (1 + gain), which is why a tuned alpha can always
    match or beat it.
    """
    s, gain = _pos_combine(norm.r_hat, norm.g_hat, norm.b_hat)
    return PulseSignal(samples=s, fps=norm.fps,
                       provenance={"method": "pos", "gain": gain, "lam": norm.lam})


def pos_project_windowed(norm: NormalizedTrace, plan: WindowPlan) -> PulseSignal:
    """POS with the gain re-estimated per analysis window.

    Overlapping windows overwrite from left to right; samples past the last
    full window stay zero, mirroring how windowed estimators ignore them.
    """
    if len(norm) != plan.n_samples:
        raise ValidationError("plan was built for a different trace length")
    out = np.zeros(len(norm))
    gains: list[float] = []
    for sl in plan.slices():
        seg, gain = _pos_combine(norm.r_hat[sl], norm.g_hat[sl], norm.b_hat[sl])
        out[sl] = seg
        gains.append(gain)
    return PulseSignal(samples=out, fps=norm.fps,
                       provenance={"method": "pos_windowed", "gains": gains,
                                   "lam": norm.lam})
