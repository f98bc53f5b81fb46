"""Windowed heart-rate estimation and the spectral quality score.

All spectra are magnitude-squared FFTs of mean-centered signals, zero-padded
to a power-of-two length so the peak location is resolved well below the
physiological bin spacing (2^14 points at 30 fps is about 0.1 bpm per bin).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .errors import (
    EmptyBandError,
    TooFewWindowsError,
    ValidationError,
    ZeroPowerError,
)
from .projection import PulseSignal
from .traces import MIN_WINDOW_SAMPLES, WindowPlan

DEFAULT_N_FFT = 2**14
TAPERS = ("rectangular", "hann")


@dataclass(frozen=True)
class FrequencyBand:
    """A closed frequency interval in Hz."""

    f_min: float
    f_max: float

    def __post_init__(self) -> None:
        if not (np.isfinite(self.f_min) and np.isfinite(self.f_max)):
            raise ValidationError("band edges must be finite")
        if not (0.0 < self.f_min < self.f_max):
            raise ValidationError(
                f"band needs 0 < f_min < f_max, got [{self.f_min!r}, {self.f_max!r}]"
            )

    @property
    def bpm_min(self) -> float:
        return 60.0 * self.f_min

    @property
    def bpm_max(self) -> float:
        return 60.0 * self.f_max

    def as_tuple(self) -> tuple[float, float]:
        return (self.f_min, self.f_max)


@dataclass(frozen=True)
class HrSeries:
    """One heart-rate estimate per analysis window, in time order."""

    times: np.ndarray
    bpm: np.ndarray
    band: FrequencyBand
    provenance: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        t = np.asarray(self.times, dtype=np.float64)
        b = np.asarray(self.bpm, dtype=np.float64)
        if t.ndim != 1 or b.ndim != 1 or len(t) != len(b):
            raise ValidationError("times and bpm must be 1-d and equally long")
        if len(t) > 1 and np.any(np.diff(t) <= 0):
            raise ValidationError("estimate times must be strictly increasing")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "bpm", b)

    def __len__(self) -> int:
        return len(self.times)


@dataclass(frozen=True)
class SpectralScore:
    """Quality of one candidate signal: lower objective is better."""

    concentration: float
    tv: float
    objective: float
    k: float

    @classmethod
    def from_parts(cls, concentration: float, tv: float, k: float) -> "SpectralScore":
        return cls(concentration=concentration, tv=tv,
                   objective=k * tv - concentration, k=k)


def _next_pow2(n: int) -> int:
    return 1 << (int(n) - 1).bit_length()


def _check_n_fft(n_fft: int) -> int:
    n_fft = int(n_fft)
    if n_fft < 2 or n_fft & (n_fft - 1):
        raise ValidationError(f"n_fft must be a power of two >= 2, got {n_fft}")
    return n_fft


def _tapered(x: np.ndarray, taper: str) -> np.ndarray:
    if taper == "rectangular":
        return x
    if taper == "hann":
        return x * np.hanning(len(x))
    raise ValidationError(f"unknown taper {taper!r}; expected one of {TAPERS}")


def _power_spectrum(
    x: np.ndarray, fps: float, n_fft: int, taper: str
) -> tuple[np.ndarray, np.ndarray]:
    """Magnitude-squared spectrum of the mean-centered, optionally tapered signal."""
    centered = x - float(np.mean(x))
    spec = np.fft.rfft(_tapered(centered, taper), n=n_fft)
    power = np.abs(spec) ** 2
    freqs = np.fft.rfftfreq(n_fft, d=1.0 / fps)
    return freqs, power


def estimate_hr_window(
    x: np.ndarray,
    fps: float,
    band: FrequencyBand,
    n_fft: int = DEFAULT_N_FFT,
    taper: str = "rectangular",
) -> tuple[float, float]:
    """Peak-frequency heart rate of one window, in bpm, plus the peak power.

    Ties break toward the lower frequency (argmax takes the first maximum on
    an ascending frequency axis).
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or len(x) < MIN_WINDOW_SAMPLES:
        raise ValidationError(
            f"window must be 1-d with >= {MIN_WINDOW_SAMPLES} samples, got {x.shape}"
        )
    n_fft = _check_n_fft(n_fft)
    if n_fft < len(x):
        raise ValidationError(f"n_fft {n_fft} shorter than the window ({len(x)})")
    if band.f_max > fps / 2.0 + 1e-12:
        raise ValidationError(
            f"band top {band.f_max:g} Hz exceeds Nyquist {fps / 2.0:g} Hz"
        )
    freqs, power = _power_spectrum(x, fps, n_fft, taper)
    mask = (freqs >= band.f_min) & (freqs <= band.f_max)
    if not np.any(mask):
        raise EmptyBandError(
            f"no spectrum bin inside [{band.f_min:g}, {band.f_max:g}] Hz "
            f"at {fps:g} fps with n_fft {n_fft}"
        )
    in_band = power[mask]
    if float(in_band.max()) == 0.0:
        raise ZeroPowerError("window has no in-band power")
    offset = int(np.argmax(mask))
    peak = offset + int(np.argmax(in_band))
    return 60.0 * float(freqs[peak]), float(power[peak])


def hr_series(
    signal: PulseSignal,
    plan: WindowPlan,
    band: FrequencyBand,
    n_fft: int = DEFAULT_N_FFT,
    taper: str = "rectangular",
) -> HrSeries:
    """Windowed heart-rate estimates for a pulse signal under a window plan."""
    if len(signal) != plan.n_samples:
        raise ValidationError(
            f"plan covers {plan.n_samples} samples but signal has {len(signal)}"
        )
    bpm = np.empty(len(plan))
    for i, sl in enumerate(plan.slices()):
        bpm[i], _ = estimate_hr_window(signal.samples[sl], signal.fps, band,
                                       n_fft=n_fft, taper=taper)
    prov = dict(signal.provenance)
    prov["n_fft"] = n_fft
    prov["taper"] = taper
    return HrSeries(times=plan.midpoint_times, bpm=bpm, band=band, provenance=prov)


def spectral_concentration(
    signal: PulseSignal,
    band: FrequencyBand,
    n_fft: int = DEFAULT_N_FFT,
    taper: str = "rectangular",
) -> float:
    """Fraction of off-DC power that falls inside the band, on the full trace.

    The FFT length grows to the next power of two at or above both the trace
    length and ``n_fft``, so long traces are never truncated.
    """
    n_fft = _check_n_fft(n_fft)
    n_use = max(n_fft, _next_pow2(len(signal)))
    if band.f_max > signal.fps / 2.0 + 1e-12:
        raise ValidationError(
            f"band top {band.f_max:g} Hz exceeds Nyquist {signal.fps / 2.0:g} Hz"
        )
    freqs, power = _power_spectrum(signal.samples, signal.fps, n_use, taper)
    total = float(np.sum(power[1:]))  # every bin except DC
    if total <= 0.0:
        raise ZeroPowerError("signal has no power off DC")
    mask = (freqs >= band.f_min) & (freqs <= band.f_max)
    if not np.any(mask):
        raise EmptyBandError(
            f"no spectrum bin inside [{band.f_min:g}, {band.f_max:g}] Hz"
        )
    return float(np.sum(power[mask])) / total


def temporal_variation(series: HrSeries) -> float:
    """Total variation of the estimates per second of elapsed midpoint time."""
    if len(series) < 2:
        raise TooFewWindowsError(
            f"temporal variation needs >= 2 estimates, got {len(series)}"
        )
    span = float(series.times[-1] - series.times[0])
    return float(np.sum(np.abs(np.diff(series.bpm)))) / span


def score_signal(
    signal: PulseSignal,
    plan: WindowPlan,
    band: FrequencyBand,
    k: float,
    n_fft: int = DEFAULT_N_FFT,
    taper: str = "rectangular",
) -> tuple[SpectralScore, HrSeries]:
    """Score a candidate and keep its heart-rate series for reuse."""
    series = hr_series(signal, plan, band, n_fft=n_fft, taper=taper)
    tv = temporal_variation(series)
    conc = spectral_concentration(signal, band, n_fft=n_fft, taper=taper)
    return SpectralScore.from_parts(concentration=conc, tv=tv, k=k), series


def objective(
    signal: PulseSignal,
    plan: WindowPlan,
    band: FrequencyBand,
    k: float = 1.0 / 3.0,
    n_fft: int = DEFAULT_N_FFT,
    taper: str = "rectangular",
) -> SpectralScore:
    """Smoothness-vs-concentration score: k * variation - concentration."""
    score, _ = score_signal(signal, plan, band, k, n_fft=n_fft, taper=taper)
    return score
