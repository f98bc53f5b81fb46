"""Spectral estimation, concentration, variation, and the joint objective."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import band_power_fraction, brute_force_peak_bpm, total_variation_rate
from prism_rppg import (
    EmptyBandError,
    FrequencyBand,
    HrSeries,
    PulseSignal,
    TooFewWindowsError,
    ValidationError,
    ZeroPowerError,
    estimate_hr_window,
    hr_series,
    objective,
    plan_windows,
    spectral_concentration,
    temporal_variation,
)
from prism_rppg.spectral import SpectralScore

BAND = FrequencyBand(0.75, 4.0)


def _signal(samples, fps=30.0) -> PulseSignal:
    return PulseSignal(samples=np.asarray(samples, dtype=np.float64), fps=fps)


class TestWindowEstimate:
    def test_pure_tone_within_one_bin(self):
        t = np.arange(300) / 30.0
        x = np.sin(2.0 * np.pi * 1.2 * t + 0.3)
        bpm, peak = estimate_hr_window(x, 30.0, BAND)
        assert abs(bpm - 72.0) <= 0.11
        assert peak > 0

    def test_matches_brute_force_oracle(self, rng):
        # small transform so the O(n_fft * n) oracle stays cheap
        for _ in range(10):
            n = int(rng.integers(64, 200))
            fps = float(rng.uniform(20.0, 40.0))
            x = rng.standard_normal(n)
            got, _ = estimate_hr_window(x, fps, BAND, n_fft=1024)
            want = brute_force_peak_bpm(x, fps, BAND.f_min, BAND.f_max, 1024)
            assert got == pytest.approx(want, abs=1e-9)

    def test_dc_offset_ignored(self):
        t = np.arange(300) / 30.0
        x = np.sin(2.0 * np.pi * 1.2 * t)
        a, _ = estimate_hr_window(x, 30.0, BAND)
        b, _ = estimate_hr_window(x + 100.0, 30.0, BAND)
        assert a == b

    def test_hann_reduces_harmonic_leakage_bias(self):
        # a strong second harmonic drags the zero-padded peak off the
        # fundamental under a bare rectangular window; the taper restores it
        t = np.arange(300) / 30.0
        phi = 2.0 * np.pi * 1.1 * t
        x = np.sin(phi) + 3.0 * np.sin(2.0 * phi)
        band = FrequencyBand(0.5, 2.0)
        rect, _ = estimate_hr_window(x, 30.0, band)
        hann, _ = estimate_hr_window(x, 30.0, band, taper="hann")
        assert abs(hann - 66.0) < abs(rect - 66.0)
        assert abs(hann - 66.0) <= 0.11

    def test_short_window_rejected(self):
        with pytest.raises(ValidationError):
            estimate_hr_window(np.ones(31), 30.0, BAND)

    def test_nfft_must_be_pow2_and_cover_signal(self):
        x = np.random.default_rng(0).standard_normal(300)
        with pytest.raises(ValidationError):
            estimate_hr_window(x, 30.0, BAND, n_fft=1000)
        with pytest.raises(ValidationError):
            estimate_hr_window(x, 30.0, BAND, n_fft=256)

    def test_band_beyond_nyquist_rejected(self):
        x = np.random.default_rng(0).standard_normal(300)
        with pytest.raises(ValidationError):
            estimate_hr_window(x, 30.0, FrequencyBand(0.75, 16.0))

    def test_band_without_bins_is_empty(self):
        x = np.random.default_rng(0).standard_normal(300)
        # 30/16384 Hz spacing leaves no bin inside (0.002, 0.0035)
        with pytest.raises(EmptyBandError):
            estimate_hr_window(x, 30.0, FrequencyBand(0.002, 0.0035))

    def test_constant_signal_has_zero_power(self):
        with pytest.raises(ZeroPowerError):
            estimate_hr_window(np.full(300, 5.0), 30.0, BAND)

    def test_unknown_taper_rejected(self):
        x = np.random.default_rng(0).standard_normal(300)
        with pytest.raises(ValidationError):
            estimate_hr_window(x, 30.0, BAND, taper="hamming")


class TestHrSeries:
    def test_chirp_window_means(self):
        # 60 -> 90 bpm over 30 s: window centers at 5/15/25 s see roughly
        # 65/75/85 bpm
        fps = 30.0
        t = np.arange(900) / fps
        f0, f1 = 1.0, 1.5
        phase = 2.0 * np.pi * (f0 * t + (f1 - f0) * t**2 / 60.0)
        sig = _signal(np.sin(phase), fps)
        plan = plan_windows(900, fps, 10.0)
        series = hr_series(sig, plan, BAND)
        np.testing.assert_allclose(series.times, [5.0, 15.0, 25.0])
        np.testing.assert_allclose(series.bpm, [65.0, 75.0, 85.0], atol=2.0)

    def test_length_mismatch_rejected(self, rng):
        sig = _signal(rng.standard_normal(500))
        plan = plan_windows(900, 30.0, 10.0)
        with pytest.raises(ValidationError):
            hr_series(sig, plan, BAND)

    def test_times_must_increase(self):
        with pytest.raises(ValidationError):
            HrSeries(times=np.array([1.0, 1.0]), bpm=np.array([60.0, 61.0]),
                     band=BAND, provenance={})


class TestConcentration:
    def test_single_in_band_tone_concentrates_fully(self):
        # tone on an exact bin with no zero padding: every non-DC unit of
        # power lands in that bin
        n = 512
        fps = 32.0
        k = 20  # 20 * 32/512 = 1.25 Hz, inside the band
        t = np.arange(n)
        x = np.cos(2.0 * np.pi * k * t / n)
        c = spectral_concentration(_signal(x, fps), BAND, n_fft=512)
        assert c == pytest.approx(1.0, abs=1e-9)

    def test_out_of_band_tone_scores_zero(self):
        n, fps = 512, 32.0
        k = 100  # 6.25 Hz, outside the band
        x = np.cos(2.0 * np.pi * k * np.arange(n) / n)
        c = spectral_concentration(_signal(x, fps), BAND, n_fft=512)
        assert c == pytest.approx(0.0, abs=1e-9)

    def test_half_split_between_bands(self):
        n, fps = 512, 32.0
        x = (np.cos(2.0 * np.pi * 20 * np.arange(n) / n)
             + np.cos(2.0 * np.pi * 100 * np.arange(n) / n))
        c = spectral_concentration(_signal(x, fps), BAND, n_fft=512)
        assert c == pytest.approx(0.5, abs=1e-9)

    def test_white_noise_matches_bandwidth_fraction(self, rng):
        # non-DC power spreads evenly, so the expectation is bandwidth over
        # Nyquist: (4.0 - 0.75) / 15
        x = rng.standard_normal(8192)
        c = spectral_concentration(_signal(x, 30.0), BAND, n_fft=8192)
        assert c == pytest.approx(3.25 / 15.0, abs=0.03)

    def test_matches_reference_fraction(self, rng):
        for _ in range(10):
            n = int(rng.integers(100, 400))
            fps = float(rng.uniform(20.0, 40.0))
            x = rng.standard_normal(n)
            got = spectral_concentration(_signal(x, fps), BAND, n_fft=1024)
            want = band_power_fraction(x, fps, BAND.f_min, BAND.f_max, 1024)
            assert got == pytest.approx(want, rel=1e-12)

    def test_grows_transform_to_cover_signal(self, rng):
        # a signal longer than n_fft must not be truncated
        x = rng.standard_normal(5000)
        c = spectral_concentration(_signal(x, 30.0), BAND, n_fft=1024)
        want = band_power_fraction(x, 30.0, BAND.f_min, BAND.f_max, 8192)
        assert c == pytest.approx(want, rel=1e-12)

    def test_band_validation(self):
        with pytest.raises(ValidationError):
            FrequencyBand(2.0, 1.0)
        with pytest.raises(ValidationError):
            FrequencyBand(0.0, 1.0)


class TestTemporalVariation:
    def test_hand_arithmetic(self):
        series = HrSeries(times=np.array([5.0, 10.0, 15.0]),
                          bpm=np.array([70.0, 80.0, 70.0]),
                          band=BAND, provenance={})
        assert temporal_variation(series) == pytest.approx(2.0)

    def test_matches_reference(self, rng):
        times = np.cumsum(rng.uniform(0.5, 2.0, 8))
        bpm = rng.uniform(50.0, 100.0, 8)
        series = HrSeries(times=times, bpm=bpm, band=BAND, provenance={})
        want = total_variation_rate(times, bpm)
        assert temporal_variation(series) == pytest.approx(want, rel=1e-12)

    def test_constant_series_has_zero_variation(self):
        series = HrSeries(times=np.array([5.0, 10.0]),
                          bpm=np.array([71.0, 71.0]),
                          band=BAND, provenance={})
        assert temporal_variation(series) == 0.0

    def test_single_window_rejected(self):
        series = HrSeries(times=np.array([5.0]), bpm=np.array([70.0]),
                          band=BAND, provenance={})
        with pytest.raises(TooFewWindowsError):
            temporal_variation(series)


class TestObjective:
    def test_score_combines_parts_exactly(self):
        score = SpectralScore.from_parts(concentration=0.6, tv=1.5, k=1.0 / 3.0)
        assert score.objective == 1.5 / 3.0 - 0.6

    def test_linear_in_weight(self, rng, clean_trace, clean_plan):
        from prism_rppg import pulse_for
        trace, _ = clean_trace
        sig = pulse_for(trace, 0.1, 0.8)
        s1 = objective(sig, clean_plan, BAND, k=0.2)
        s2 = objective(sig, clean_plan, BAND, k=0.7)
        assert s1.concentration == s2.concentration
        assert s1.tv == s2.tv
        assert s2.objective - s1.objective == pytest.approx(0.5 * s1.tv, rel=1e-12)

    def test_amplitude_invariance(self, rng):
        fps = 30.0
        x = rng.standard_normal(900)
        plan = plan_windows(900, fps, 10.0)
        a = objective(_signal(x, fps), plan, BAND, n_fft=1024)
        b = objective(_signal(1000.0 * x, fps), plan, BAND, n_fft=1024)
        assert a.concentration == pytest.approx(b.concentration, rel=1e-9)
        assert a.tv == b.tv

    @settings(max_examples=40, deadline=None)
    @given(k=st.floats(min_value=0.0, max_value=10.0, allow_nan=False))
    def test_objective_identity_holds_for_any_weight(self, k):
        score = SpectralScore.from_parts(concentration=0.42, tv=0.9, k=k)
        assert score.objective == k * 0.9 - 0.42
