"""Effective pipeline configuration: defaults, config file, then flags.

Later sources override earlier ones key by key.  The merged result is echoed
into every report the CLI writes, so a report alone is enough to reproduce
the run.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping

from .errors import ParseError, ValidationError
from .optimizer import AblationMode, BandPair, ParamGrid, DEFAULT_ALPHAS, DEFAULT_LAMS, K_DEFAULT
from .spectral import DEFAULT_N_FFT, TAPERS, FrequencyBand

_CONFIG_KEYS = (
    "fps", "window", "hop", "nfft", "k", "alpha_grid", "lambda_grid", "mode",
    "band_high", "band_low", "harmonic_tol", "aggregation", "threshold",
    "taper", "seed",
)


@dataclass(frozen=True)
class PipelineConfig:
    fps: float | None = None
    window: float = 10.0
    hop: float | None = None
    nfft: int = DEFAULT_N_FFT
    k: float = K_DEFAULT
    alpha_grid: tuple[float, ...] = DEFAULT_ALPHAS
    lambda_grid: tuple[float, ...] = DEFAULT_LAMS
    mode: str = "full"
    band_high: tuple[float, float] = (0.75, 4.0)
    band_low: tuple[float, float] = (0.5, 3.0)
    harmonic_tol: float = 0.05
    aggregation: str = "per_window"
    threshold: float = 5.0
    taper: str = "rectangular"
    seed: int | None = None

    def __post_init__(self) -> None:
        if self.window <= 0:
            raise ValidationError("window must be positive")
        if self.hop is not None and self.hop <= 0:
            raise ValidationError("hop must be positive")
        if self.taper not in TAPERS:
            raise ValidationError(f"taper must be one of {TAPERS}, got {self.taper!r}")
        if self.aggregation not in ("per_window", "per_trace"):
            raise ValidationError(
                f"aggregation must be per_window or per_trace, got {self.aggregation!r}"
            )
        if not self.threshold > 0:
            raise ValidationError("threshold must be positive")
        nfft = int(self.nfft)
        if nfft < 2 or nfft & (nfft - 1):
            raise ValidationError(f"nfft must be a power of two, got {self.nfft!r}")
        object.__setattr__(self, "nfft", nfft)
        # Building the derived objects validates grids, bands, and mode early.
        self.grid()
        self.bands()
        self.ablation_mode()

    def grid(self) -> ParamGrid:
        return ParamGrid(alphas=self.alpha_grid, lams=self.lambda_grid)

    def bands(self) -> BandPair:
        return BandPair(high=FrequencyBand(*self.band_high),
                        low=FrequencyBand(*self.band_low),
                        harmonic_tolerance=self.harmonic_tol)

    def ablation_mode(self) -> AblationMode:
        return AblationMode.parse(self.mode)

    def effective_hop(self) -> float:
        return self.window if self.hop is None else self.hop

    def to_dict(self) -> dict[str, Any]:
        return {
            "fps": self.fps,
            "window": self.window,
            "hop": self.hop,
            "nfft": self.nfft,
            "k": self.k,
            "alpha_grid": list(self.alpha_grid),
            "lambda_grid": list(self.lambda_grid),
            "mode": self.mode,
            "band_high": list(self.band_high),
            "band_low": list(self.band_low),
            "harmonic_tol": self.harmonic_tol,
            "aggregation": self.aggregation,
            "threshold": self.threshold,
            "taper": self.taper,
            "seed": self.seed,
        }


def _coerce(key: str, value: Any) -> Any:
    if value is None:
        return None
    if key in ("alpha_grid", "lambda_grid"):
        return tuple(float(v) for v in value)
    if key in ("band_high", "band_low"):
        vals = tuple(float(v) for v in value)
        if len(vals) != 2:
            raise ValidationError(f"{key} needs exactly two edges, got {value!r}")
        return vals
    if key in ("fps", "window", "hop", "k", "harmonic_tol", "threshold"):
        return float(value)
    if key in ("nfft", "seed"):
        return int(value)
    return value


def load_config_file(path: str | Path) -> dict[str, Any]:
    """Read a JSON config file and reject unknown keys outright."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(obj, dict):
        raise ParseError(f"{path}: config must be a JSON object")
    unknown = set(obj) - set(_CONFIG_KEYS)
    if unknown:
        raise ValidationError(f"{path}: unknown config key(s): {sorted(unknown)}")
    return obj


def build_config(
    file_values: Mapping[str, Any] | None = None,
    flag_values: Mapping[str, Any] | None = None,
) -> PipelineConfig:
    """Merge defaults, config file, and flags; flags win."""
    merged: dict[str, Any] = {}
    for source in (file_values, flag_values):
        if not source:
            continue
        for key, value in source.items():
            if key not in _CONFIG_KEYS:
                raise ValidationError(f"unknown config key {key!r}")
            if value is None:
                continue
            merged[key] = _coerce(key, value)
    return PipelineConfig(**merged)
