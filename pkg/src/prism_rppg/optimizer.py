"""Joint selection of smoothing weight and projection axis, offline and online.

The selector scores every (lam, alpha) cell of a small grid with the spectral
quality objective and keeps the minimizer.  Scoring a cell never mutates
shared state, so candidate evaluation order only matters for tie-breaking,
which is fixed: smaller lam first, then smaller alpha.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable, Iterator

import numpy as np

from .detrend import NormalizedTrace, normalize_trace
from .errors import AllCandidatesFailedError, PrismError, ValidationError
from .projection import PulseSignal, prism_project
from .spectral import (
    DEFAULT_N_FFT,
    FrequencyBand,
    HrSeries,
    SpectralScore,
    estimate_hr_window,
    hr_series,
    spectral_concentration,
    temporal_variation,
)
from .traces import RgbTrace, WindowPlan, plan_windows

_log = logging.getLogger(__name__)

K_DEFAULT = 1.0 / 3.0
DEFAULT_ALPHAS = (0.5, 0.6, 0.7, 0.8, 0.9, 1.0)
DEFAULT_LAMS = (0.01, 0.05, 0.1, 0.5, 1.0)
ONLINE_DEFAULT_LAM = 0.1
ONLINE_DEFAULT_ALPHA = 0.8

# Cache types shared between the two band searches and across ablation modes:
# per-lam normalized traces, and per-(lam, alpha, band) raw cell evaluations
# (concentration, temporal variation, per-window bpm), which do not depend on
# the objective weight or the selection criterion.
NormCache = dict[float, NormalizedTrace]
EvalCache = dict[tuple[float, float, float, float], tuple[float, float, tuple[float, ...]]]


@dataclass(frozen=True)
class ParamGrid:
    """Candidate values; stored sorted ascending so tie-breaks are positional."""

    alphas: tuple[float, ...] = DEFAULT_ALPHAS
    lams: tuple[float, ...] = DEFAULT_LAMS

    def __post_init__(self) -> None:
        alphas = tuple(sorted(set(float(a) for a in self.alphas)))
        lams = tuple(sorted(set(float(l) for l in self.lams)))
        if not alphas or not lams:
            raise ValidationError("grid must contain at least one alpha and one lam")
        if any(not (-1.0 <= a <= 1.0) for a in alphas):
            raise ValidationError("grid alphas must lie in [-1, 1]")
        if any(not (np.isfinite(l) and l > 0) for l in lams):
            raise ValidationError("grid lams must be positive and finite")
        object.__setattr__(self, "alphas", alphas)
        object.__setattr__(self, "lams", lams)


_MODE_KINDS = ("full", "fixed_alpha", "fixed_lambda", "concentration_only", "tv_only")


@dataclass(frozen=True)
class AblationMode:
    """What the selector is allowed to adapt, and what it scores by."""

    kind: str = "full"
    value: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in _MODE_KINDS:
            raise ValidationError(f"unknown mode {self.kind!r}; expected {_MODE_KINDS}")
        if self.kind in ("fixed_alpha", "fixed_lambda"):
            if self.value is None or not np.isfinite(self.value):
                raise ValidationError(f"mode {self.kind} needs a finite value")
            if self.kind == "fixed_alpha" and not (-1.0 <= self.value <= 1.0):
                raise ValidationError("fixed alpha must lie in [-1, 1]")
            if self.kind == "fixed_lambda" and self.value <= 0:
                raise ValidationError("fixed lambda must be positive")
        elif self.value is not None:
            raise ValidationError(f"mode {self.kind} takes no value")

    @classmethod
    def parse(cls, text: str) -> "AblationMode":
        """Parse CLI syntax: 'full', 'tv_only', 'fixed_alpha=0.6', ..."""
        text = text.strip()
        if "=" in text:
            kind, _, raw = text.partition("=")
            try:
                return cls(kind=kind.strip(), value=float(raw))
            except ValueError as exc:
                raise ValidationError(f"bad mode value in {text!r}") from exc
        return cls(kind=text)

    def label(self) -> str:
        if self.value is not None:
            return f"{self.kind}={self.value:g}"
        return self.kind


@dataclass(frozen=True)
class GridCell:
    """Audit record for one candidate evaluation."""

    lam: float
    alpha: float
    score: SpectralScore | None
    criterion: float | None
    error: str | None = None


@dataclass(frozen=True)
class ParamChoice:
    """The selected cell plus the full audit trail of the search."""

    lam_star: float
    alpha_star: float
    score: SpectralScore
    band_used: FrequencyBand
    mode: AblationMode
    k: float
    all_scores: tuple[GridCell, ...]


@dataclass(frozen=True)
class BandPair:
    """The two concentration bands and the harmonic decision tolerance."""

    high: FrequencyBand = field(default_factory=lambda: FrequencyBand(0.75, 4.0))
    low: FrequencyBand = field(default_factory=lambda: FrequencyBand(0.5, 3.0))
    harmonic_tolerance: float = 0.05

    def __post_init__(self) -> None:
        if not (self.low.f_min < self.high.f_min and self.low.f_max < self.high.f_max):
            raise ValidationError(
                "low band must sit strictly below the high band on both edges"
            )
        if not (0.0 < self.harmonic_tolerance <= 0.2):
            raise ValidationError("harmonic tolerance must lie in (0, 0.2]")


def _resolve_grid(grid: ParamGrid, mode: AblationMode) -> tuple[ParamGrid, float | None]:
    """Apply a mode's constraint to the grid; returns (grid, k_override)."""
    if mode.kind == "fixed_alpha":
        return ParamGrid(alphas=(float(mode.value),), lams=grid.lams), None
    if mode.kind == "fixed_lambda":
        return ParamGrid(alphas=grid.alphas, lams=(float(mode.value),)), None
    if mode.kind == "concentration_only":
        return grid, 0.0
    return grid, None


def _normalized(trace: RgbTrace, lam: float, cache: NormCache) -> NormalizedTrace:
    norm = cache.get(lam)
    if norm is None:
        norm = normalize_trace(trace, lam)
        cache[lam] = norm
    return norm


def _evaluate_cell(
    trace: RgbTrace,
    plan: WindowPlan,
    band: FrequencyBand,
    lam: float,
    alpha: float,
    n_fft: int,
    taper: str,
    norm_cache: NormCache,
    eval_cache: EvalCache | None,
) -> tuple[float, float, tuple[float, ...]]:
    """(concentration, temporal variation, windowed bpm) for one cell."""
    key = (lam, alpha, band.f_min, band.f_max)
    if eval_cache is not None:
        hit = eval_cache.get(key)
        if hit is not None:
            return hit
    signal = prism_project(_normalized(trace, lam, norm_cache), alpha)
    series = hr_series(signal, plan, band, n_fft=n_fft, taper=taper)
    tv = temporal_variation(series)
    conc = spectral_concentration(signal, band, n_fft=n_fft, taper=taper)
    result = (conc, tv, tuple(float(v) for v in series.bpm))
    if eval_cache is not None:
        eval_cache[key] = result
    return result


def grid_search(
    trace: RgbTrace,
    plan: WindowPlan,
    band: FrequencyBand,
    grid: ParamGrid | None = None,
    *,
    mode: AblationMode = AblationMode(),
    k: float = K_DEFAULT,
    n_fft: int = DEFAULT_N_FFT,
    taper: str = "rectangular",
    _norm_cache: NormCache | None = None,
    _eval_cache: EvalCache | None = None,
) -> ParamChoice:
    """Exhaustively score the grid for one band and return the minimizer.

    Individual candidates may fail (for example a degenerate projection with
    no off-DC power); those cells are recorded and skipped.  Only when every
    cell fails is the search itself an error.
    """
    if grid is None:
        grid = ParamGrid()
    search_grid, k_override = _resolve_grid(grid, mode)
    k_eff = k if k_override is None else k_override
    norm_cache = _norm_cache if _norm_cache is not None else {}

    cells: list[GridCell] = []
    best: tuple[float, float, float] | None = None  # criterion, lam, alpha
    best_score: SpectralScore | None = None
    for lam in search_grid.lams:
        for alpha in search_grid.alphas:
            try:
                conc, tv, _ = _evaluate_cell(trace, plan, band, lam, alpha,
                                             n_fft, taper, norm_cache, _eval_cache)
            except PrismError as exc:
                cells.append(GridCell(lam=lam, alpha=alpha, score=None,
                                      criterion=None, error=str(exc)))
                continue
            score = SpectralScore.from_parts(concentration=conc, tv=tv, k=k_eff)
            criterion = score.tv if mode.kind == "tv_only" else score.objective
            cells.append(GridCell(lam=lam, alpha=alpha, score=score,
                                  criterion=criterion))
            # Strict less-than keeps the first (smallest lam, then smallest
            # alpha) of any exact tie, since iteration is sorted ascending.
            if best is None or criterion < best[0]:
                best = (criterion, lam, alpha)
                best_score = score
    if best is None or best_score is None:
        first_error = next((c.error for c in cells if c.error), "no candidates")
        raise AllCandidatesFailedError(
            f"all {len(cells)} grid cells failed; first error: {first_error}"
        )
    return ParamChoice(lam_star=best[1], alpha_star=best[2], score=best_score,
                       band_used=band, mode=mode, k=k_eff, all_scores=tuple(cells))


def pulse_for(
    trace: RgbTrace,
    lam: float,
    alpha: float,
    norm_cache: NormCache | None = None,
) -> PulseSignal:
    """Detrend and project a trace at explicit parameter values."""
    if norm_cache is None:
        norm_cache = {}
    return prism_project(_normalized(trace, lam, norm_cache), alpha)


@dataclass(frozen=True)
class DualBandResult:
    """Winner of the two-band selection plus both branches for audit."""

    choice: ParamChoice
    hr: HrSeries
    high_choice: ParamChoice
    low_choice: ParamChoice
    hr_high: HrSeries
    hr_low: HrSeries
    mean_high_bpm: float
    mean_low_bpm: float
    harmonic_rule_fired: bool


def dual_band_select(
    trace: RgbTrace,
    plan: WindowPlan,
    bands: BandPair | None = None,
    grid: ParamGrid | None = None,
    *,
    mode: AblationMode = AblationMode(),
    k: float = K_DEFAULT,
    n_fft: int = DEFAULT_N_FFT,
    taper: str = "rectangular",
    _norm_cache: NormCache | None = None,
    _eval_cache: EvalCache | None = None,
) -> DualBandResult:
    """Run the grid search in both bands and arbitrate the harmonic ambiguity.

    When the high band's mean rate sits within the tolerance of twice the low
    band's, the high band is presumed to have locked onto a first harmonic
    and the low-band result wins; otherwise the high band wins, including the
    no-harmonic case where both branches agree.
    """
    if bands is None:
        bands = BandPair()
    norm_cache = _norm_cache if _norm_cache is not None else {}
    eval_cache = _eval_cache if _eval_cache is not None else {}

    def winner_series(choice: ParamChoice, band: FrequencyBand) -> HrSeries:
        _, _, bpm = _evaluate_cell(trace, plan, band, choice.lam_star,
                                   choice.alpha_star, n_fft, taper,
                                   norm_cache, eval_cache)
        return HrSeries(times=plan.midpoint_times, bpm=np.asarray(bpm), band=band,
                        provenance={"method": "prism", "alpha": choice.alpha_star,
                                    "lam": choice.lam_star, "n_fft": n_fft,
                                    "taper": taper})

    high = grid_search(trace, plan, bands.high, grid, mode=mode, k=k,
                       n_fft=n_fft, taper=taper,
                       _norm_cache=norm_cache, _eval_cache=eval_cache)
    low = grid_search(trace, plan, bands.low, grid, mode=mode, k=k,
                      n_fft=n_fft, taper=taper,
                      _norm_cache=norm_cache, _eval_cache=eval_cache)
    hr_high = winner_series(high, bands.high)
    hr_low = winner_series(low, bands.low)
    mean_high = float(np.mean(hr_high.bpm))
    mean_low = float(np.mean(hr_low.bpm))
    fired = abs(mean_high - 2.0 * mean_low) <= bands.harmonic_tolerance * mean_high
    if fired:
        chosen, chosen_hr = low, hr_low
    else:
        chosen, chosen_hr = high, hr_high
    return DualBandResult(choice=chosen, hr=chosen_hr, high_choice=high,
                          low_choice=low, hr_high=hr_high, hr_low=hr_low,
                          mean_high_bpm=mean_high, mean_low_bpm=mean_low,
                          harmonic_rule_fired=fired)


@dataclass(frozen=True)
class OnlineEstimate:
    """One per completed window: the rate and the parameters that produced it."""

    midpoint_time: float
    bpm: float
    lam: float
    alpha: float
    band: FrequencyBand


@dataclass(frozen=True)
class OnlineRefresh:
    """One per re-selection attempt at a window boundary."""

    time: float
    choice: ParamChoice | None  # None when the refresh failed
    buffer_start: float
    buffer_end: float
    applied: bool


def run_online(
    samples: Iterable[tuple[float, float, float]],
    fps: float,
    *,
    bands: BandPair | None = None,
    grid: ParamGrid | None = None,
    window_length: float = 10.0,
    k: float = K_DEFAULT,
    n_fft: int = DEFAULT_N_FFT,
    taper: str = "rectangular",
    init_duration: float = 60.0,
    refresh_interval: float = 10.0,
    buffer_cap: float = 120.0,
    default_lam: float = ONLINE_DEFAULT_LAM,
    default_alpha: float = ONLINE_DEFAULT_ALPHA,
    t0: float = 0.0,
) -> Iterator[OnlineEstimate | OnlineRefresh]:
    """Streaming estimation with periodic parameter re-selection.

    Estimates use the active (lam, alpha, band) on each completed window; the
    defaults apply until the first re-selection at ``init_duration``.  Every
    ``refresh_interval`` thereafter the full two-band search re-runs on a
    trailing buffer capped at ``buffer_cap`` seconds, and its winner takes
    effect from the next window on.  A failed refresh keeps the prior
    parameters, so one bad stretch cannot silence the stream.  Each window is
    detrended on its own samples, which keeps per-window cost flat.
    """
    if bands is None:
        bands = BandPair()
    if init_duration < 2 * window_length:
        raise ValidationError(
            "init_duration must cover at least two windows so the first "
            "re-selection has enough data"
        )
    if buffer_cap < 2 * window_length:
        raise ValidationError("buffer_cap must cover at least two windows")
    if refresh_interval <= 0:
        raise ValidationError("refresh_interval must be positive")
    win = int(np.floor(window_length * fps))
    cap_n = int(np.floor(buffer_cap * fps))

    lam, alpha = float(default_lam), float(default_alpha)
    band = bands.high
    buf: list[tuple[float, float, float]] = []
    window_rows: list[tuple[float, float, float]] = []
    n_seen = 0
    last_refresh: float | None = None

    for row in samples:
        r, g, b = float(row[0]), float(row[1]), float(row[2])
        if not (np.isfinite(r) and np.isfinite(g) and np.isfinite(b)):
            raise ValidationError(f"non-finite sample at stream index {n_seen}")
        if r <= 0 or g <= 0 or b <= 0:
            raise ValidationError(f"non-positive sample at stream index {n_seen}")
        buf.append((r, g, b))
        if len(buf) > cap_n:
            del buf[: len(buf) - cap_n]
        window_rows.append((r, g, b))
        n_seen += 1
        if len(window_rows) < win:
            continue

        start_time = t0 + (n_seen - win) / fps
        wtrace = RgbTrace(samples=np.asarray(window_rows), fps=fps, t0=start_time)
        window_rows = []
        pulse = prism_project(normalize_trace(wtrace, lam), alpha)
        bpm, _ = estimate_hr_window(pulse.samples, fps, band, n_fft=n_fft, taper=taper)
        yield OnlineEstimate(midpoint_time=start_time + window_length / 2.0,
                             bpm=bpm, lam=lam, alpha=alpha, band=band)

        elapsed = n_seen / fps
        due = elapsed + 1e-9 >= init_duration and (
            last_refresh is None or elapsed + 1e-9 >= last_refresh + refresh_interval
        )
        if not due:
            continue
        last_refresh = elapsed
        buf_t0 = t0 + (n_seen - len(buf)) / fps
        buf_t1 = t0 + n_seen / fps
        try:
            btrace = RgbTrace(samples=np.asarray(buf), fps=fps, t0=buf_t0)
            bplan = plan_windows(len(btrace), fps, window_length, window_length,
                                 t0=buf_t0)
            result = dual_band_select(btrace, bplan, bands, grid, k=k,
                                      n_fft=n_fft, taper=taper)
        except PrismError as exc:
            _log.warning("refresh at t=%.3f failed (%s); keeping lam=%g alpha=%g",
                         buf_t1, exc, lam, alpha)
            yield OnlineRefresh(time=buf_t1, choice=None, buffer_start=buf_t0,
                                buffer_end=buf_t1, applied=False)
            continue
        lam = result.choice.lam_star
        alpha = result.choice.alpha_star
        band = result.choice.band_used
        yield OnlineRefresh(time=buf_t1, choice=result.choice, buffer_start=buf_t0,
                            buffer_end=buf_t1, applied=True)
