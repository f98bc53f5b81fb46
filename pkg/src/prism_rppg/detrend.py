"""Penalized smoothing-spline baselines and trace normalization.

The baseline of a channel x sampled at times t_1 < ... < t_n minimizes

    sum_k w_k (g(t_k) - x_k)^2 + lam * integral g''(u)^2 du

over twice-differentiable functions.  The minimizer is a natural cubic spline
with knots at the sample times, so the fit reduces to a symmetric
positive-definite pentadiagonal solve for the interior second derivatives
(classic Reinsch scheme), O(n) time and memory.  ``lam`` carries units of
seconds cubed; larger values give stiffer baselines.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solveh_banded

from .errors import (
    BaselineNonPositiveError,
    NumericalError,
    TooFewSamplesError,
    ValidationError,
)
from .traces import RgbTrace

UNIFORMITY_RTOL = 1e-6


@dataclass(frozen=True)
class SplineConfig:
    """Smoothing parameters: penalty weight and optional per-sample weights."""

    lam: float
    weights: np.ndarray | None = None

    def __post_init__(self) -> None:
        if not (np.isfinite(self.lam) and self.lam > 0):
            raise ValidationError(f"lam must be positive and finite, got {self.lam!r}")
        if self.weights is not None:
            w = np.asarray(self.weights, dtype=np.float64)
            if w.ndim != 1 or not np.all(np.isfinite(w)) or np.any(w <= 0):
                raise ValidationError("weights must be a 1-d array of positive finites")
            object.__setattr__(self, "weights", w)


@dataclass(frozen=True)
class BaselineFit:
    """Fitted baseline plus the quantities the quadratic objective is built from."""

    fitted: np.ndarray
    curvature: np.ndarray  # second derivatives at interior knots
    roughness: float       # integral of squared second derivative
    residual_ss: float     # weighted sum of squared residuals


def _check_times(times: np.ndarray, n: int) -> np.ndarray:
    t = np.asarray(times, dtype=np.float64)
    if t.ndim != 1 or len(t) != n:
        raise ValidationError("times must be 1-d and match the signal length")
    h = np.diff(t)
    if np.any(h <= 0):
        raise ValidationError("times must be strictly increasing")
    mean_h = float(np.mean(h))
    if np.max(np.abs(h - mean_h)) > UNIFORMITY_RTOL * mean_h:
        raise ValidationError("times must be uniformly spaced; resample first")
    return h


def fit_baseline(
    x: np.ndarray,
    times: np.ndarray,
    lam: float,
    weights: np.ndarray | None = None,
) -> BaselineFit:
    """Fit the penalized natural cubic spline baseline of one channel."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValidationError("signal must be 1-d")
    n = len(x)
    if n < 4:
        raise TooFewSamplesError(f"spline fit needs at least 4 samples, got {n}")
    if not np.all(np.isfinite(x)):
        raise ValidationError("signal contains non-finite values")
    if not (np.isfinite(lam) and lam > 0):
        raise ValidationError(f"lam must be positive and finite, got {lam!r}")
    h = _check_times(times, n)
    if weights is None:
        v = np.ones(n)
    else:
        w = np.asarray(weights, dtype=np.float64)
        if w.shape != x.shape or np.any(w <= 0) or not np.all(np.isfinite(w)):
            raise ValidationError("weights must be positive finites matching the signal")
        v = 1.0 / w

    m = n - 2
    hi = h[:-1]   # h_i,   i = 0..m-1
    hj = h[1:]    # h_{i+1}
    # Second-difference operator applied to x: b = Q^T x.
    b = np.diff(np.diff(x) / h)

    # A = R + lam * Q^T V Q, symmetric pentadiagonal, assembled by band.
    d0 = (hi + hj) / 3.0 + lam * (
        v[:m] / hi**2 + v[1 : m + 1] * (1.0 / hi + 1.0 / hj) ** 2 + v[2:] / hj**2
    )
    ab = np.zeros((3, m))
    ab[2, :] = d0
    if m > 1:
        # First superdiagonal: A[i, i+1] for i = 0..m-2.
        ab[1, 1:] = hj[:-1] / 6.0 - lam * (
            v[1:m] * (1.0 / hi[:-1] + 1.0 / hj[:-1]) / hj[:-1]
            + v[2 : m + 1] * (1.0 / hj[:-1] + 1.0 / hj[1:]) / hj[:-1]
        )
    if m > 2:
        # Second superdiagonal: A[i, i+2] for i = 0..m-3.
        ab[0, 2:] = lam * v[2:m] / (hj[:-2] * hj[1:-1])
    try:
        gamma = solveh_banded(ab, b, lower=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"banded spline solve failed: {exc}") from exc
    if not np.all(np.isfinite(gamma)):
        raise NumericalError("spline solve produced non-finite curvature")

    # g = x - lam * V Q gamma, with Q gamma formed by nested differencing.
    padded = np.concatenate(([0.0], gamma, [0.0]))
    u = np.diff(padded) / h
    q_gamma = np.diff(np.concatenate(([0.0], u, [0.0])))
    fitted = x - lam * v * q_gamma
    if not np.all(np.isfinite(fitted)):
        raise NumericalError("spline fit produced non-finite baseline")

    roughness = float(np.dot(gamma**2, (hi + hj) / 3.0))
    if m > 1:
        roughness += 2.0 * float(np.dot(gamma[:-1] * gamma[1:], hj[:-1] / 6.0))
    resid = x - fitted
    wts = np.ones(n) if weights is None else np.asarray(weights, dtype=np.float64)
    residual_ss = float(np.dot(wts, resid**2))
    return BaselineFit(fitted=fitted, curvature=gamma, roughness=roughness,
                       residual_ss=residual_ss)


def fit_smoothing_spline(x: np.ndarray, times: np.ndarray, cfg: SplineConfig) -> np.ndarray:
    """Baseline values at the sample times."""
    return fit_baseline(x, times, cfg.lam, cfg.weights).fitted


@dataclass(frozen=True)
class NormalizedTrace:
    """Channels divided by their own spline baselines (unit-mean by construction)."""

    channels: np.ndarray   # (n, 3) normalized r, g, b
    baselines: np.ndarray  # (n, 3) fitted baselines
    fps: float
    lam: float

    @property
    def r_hat(self) -> np.ndarray:
        return self.channels[:, 0]

    @property
    def g_hat(self) -> np.ndarray:
        return self.channels[:, 1]

    @property
    def b_hat(self) -> np.ndarray:
        return self.channels[:, 2]

    def __len__(self) -> int:
        return self.channels.shape[0]


def normalize_trace(
    trace: RgbTrace,
    lam: float,
    weights: np.ndarray | None = None,
) -> NormalizedTrace:
    """Divide each channel by its fitted baseline.

    Division (rather than subtraction) matches a multiplicative illumination
    model: slow gain changes cancel and the pulse rides on a level near 1.
    """
    times = trace.times
    norm = np.empty_like(trace.samples)
    bases = np.empty_like(trace.samples)
    for idx, name in enumerate("rgb"):
        fit = fit_baseline(trace.samples[:, idx], times, lam, weights)
        base = fit.fitted
        if np.any(base <= 0):
            raise BaselineNonPositiveError(
                f"channel {name!r} baseline reaches "
                f"{float(base.min()):g}; cannot divide"
            )
        bases[:, idx] = base
        norm[:, idx] = trace.samples[:, idx] / base
    return NormalizedTrace(channels=norm, baselines=bases, fps=trace.fps, lam=lam)
