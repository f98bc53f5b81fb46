"""Trace containers, window planning, and file round-trips."""

from __future__ import annotations

import numpy as np
import pytest

from prism_rppg import (
    CoverageError,
    GroundTruth,
    ParseError,
    RgbTrace,
    TooShortError,
    ValidationError,
    WindowPlan,
    WindowTooSmallError,
    gt_hr_at_midpoints,
    gt_to_hr_series,
    load_ground_truth,
    load_trace,
    plan_windows,
    save_trace,
)


def _trace(n=600, fps=30.0, t0=0.0, rng=None):
    rng = rng or np.random.default_rng(0)
    samples = rng.uniform(50.0, 200.0, (n, 3))
    return RgbTrace(samples=samples, fps=fps, t0=t0)


class TestWindowPlan:
    def test_hand_counted_layout(self):
        # 600 samples at 30 fps, 10 s window, 5 s hop:
        # 300-sample windows starting at 0, 150, 300
        plan = plan_windows(600, 30.0, 10.0, 5.0)
        assert plan.window_samples == 300
        assert plan.hop_samples == 150
        np.testing.assert_array_equal(plan.starts, [0, 150, 300])
        np.testing.assert_allclose(plan.midpoint_times, [5.0, 10.0, 15.0])

    def test_hop_defaults_to_window(self):
        plan = plan_windows(900, 30.0, 10.0)
        np.testing.assert_array_equal(plan.starts, [0, 300, 600])

    def test_time_offset_shifts_midpoints(self):
        plan = plan_windows(600, 30.0, 10.0, 5.0, t0=100.0)
        np.testing.assert_allclose(plan.midpoint_times, [105.0, 110.0, 115.0])

    def test_slices_cover_planned_ranges(self):
        plan = plan_windows(600, 30.0, 10.0, 5.0)
        slices = plan.slices()
        assert [s.start for s in slices] == [0, 150, 300]
        assert all(s.stop - s.start == 300 for s in slices)

    def test_fractional_rates_floor(self):
        plan = plan_windows(600, 29.97, 10.0)
        assert plan.window_samples == 299

    def test_window_too_small(self):
        with pytest.raises(WindowTooSmallError):
            plan_windows(600, 20.0, 1.0)

    def test_too_few_windows(self):
        with pytest.raises(TooShortError):
            plan_windows(450, 30.0, 10.0)


class TestRgbTrace:
    def test_channel_access_and_times(self):
        trace = _trace(n=60, fps=30.0, t0=2.0)
        assert trace.duration == pytest.approx(2.0)
        assert trace.times[0] == pytest.approx(2.0)
        np.testing.assert_array_equal(trace.channel("g"), trace.samples[:, 1])

    def test_rejects_nonpositive_samples(self):
        samples = np.ones((40, 3))
        samples[3, 1] = 0.0
        with pytest.raises(ValidationError):
            RgbTrace(samples=samples, fps=30.0)

    def test_rejects_nonfinite_samples(self):
        samples = np.ones((40, 3))
        samples[3, 1] = np.nan
        with pytest.raises(ValidationError):
            RgbTrace(samples=samples, fps=30.0)

    def test_rejects_bad_shape(self):
        with pytest.raises(ValidationError):
            RgbTrace(samples=np.ones((40, 2)), fps=30.0)

    def test_min_duration_gate(self):
        trace = _trace(n=500)
        with pytest.raises(TooShortError):
            trace.ensure_min_duration(10.0)
        _trace(n=600).ensure_min_duration(10.0)


class TestTraceIO:
    def test_csv_round_trip_bit_exact(self, tmp_path, rng):
        trace = _trace(rng=rng, t0=1.5)
        path = tmp_path / "trace.csv"
        save_trace(trace, path)
        back = load_trace(path)
        np.testing.assert_array_equal(back.samples, trace.samples)
        assert back.fps == trace.fps
        assert back.t0 == trace.t0

    def test_json_round_trip_bit_exact(self, tmp_path, rng):
        trace = _trace(rng=rng)
        path = tmp_path / "trace.json"
        save_trace(trace, path)
        back = load_trace(path)
        np.testing.assert_array_equal(back.samples, trace.samples)
        assert back.fps == trace.fps

    def test_fps_override_wins(self, tmp_path, rng):
        trace = _trace(rng=rng)
        path = tmp_path / "trace.csv"
        save_trace(trace, path)
        back = load_trace(path, fps_override=25.0)
        assert back.fps == 25.0

    def test_missing_fps_is_parse_error(self, tmp_path):
        path = tmp_path / "nofps.csv"
        rows = "\n".join("100.0,100.0,100.0" for _ in range(700))
        path.write_text("r,g,b\n" + rows + "\n")
        with pytest.raises(ParseError, match="fps"):
            load_trace(path)
        trace = load_trace(path, fps_override=30.0)
        assert trace.fps == 30.0

    def test_malformed_row_is_parse_error(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("# fps=30.0\nr,g,b\n1.0,2.0\n")
        with pytest.raises(ParseError):
            load_trace(path)

    def test_short_file_is_too_short(self, tmp_path):
        path = tmp_path / "short.csv"
        rows = "\n".join("100.0,100.0,100.0" for _ in range(100))
        path.write_text("# fps=30.0\nr,g,b\n" + rows + "\n")
        with pytest.raises(TooShortError):
            load_trace(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_trace(tmp_path / "absent.csv")

    def test_unknown_extension(self, tmp_path):
        path = tmp_path / "trace.xml"
        path.write_text("whatever")
        with pytest.raises(ParseError):
            load_trace(path)


class TestGroundTruthIO:
    def test_hr_series_parse(self, tmp_path):
        path = tmp_path / "gt.csv"
        path.write_text("t,hr\n0.0,70.0\n1.0,71.0\n2.0,72.0\n")
        gt = load_ground_truth(path)
        assert gt.kind == "hr_series"
        np.testing.assert_array_equal(gt.times, [0.0, 1.0, 2.0])
        np.testing.assert_array_equal(gt.values, [70.0, 71.0, 72.0])

    def test_out_of_range_labels_warn_but_stay(self, tmp_path):
        path = tmp_path / "gt.csv"
        path.write_text("t,hr\n0.0,70.0\n1.0,300.0\n2.0,72.0\n")
        with pytest.warns(UserWarning, match="outside"):
            gt = load_ground_truth(path)
        assert len(gt.values) == 3
        assert gt.values[1] == 300.0

    def test_ppg_requires_uniform_times(self, tmp_path):
        path = tmp_path / "gt.csv"
        lines = ["t,ppg"] + [f"{i/60.0},{np.sin(i/10.0)}" for i in range(120)]
        path.write_text("\n".join(lines) + "\n")
        gt = load_ground_truth(path)
        assert gt.kind == "raw_ppg"
        assert gt.fps_gt == pytest.approx(60.0, rel=1e-6)

        jittered = ["t,ppg"] + [f"{i/60.0 + (0.004 if i == 50 else 0.0)},1.0"
                                for i in range(120)]
        path.write_text("\n".join(jittered) + "\n")
        with pytest.raises(ValidationError):
            load_ground_truth(path)

    def test_decreasing_times_rejected(self, tmp_path):
        path = tmp_path / "gt.csv"
        path.write_text("t,hr\n0.0,70.0\n0.0,71.0\n")
        with pytest.raises(ValidationError):
            load_ground_truth(path)

    def test_unknown_header_rejected(self, tmp_path):
        path = tmp_path / "gt.csv"
        path.write_text("time,rate\n0.0,70.0\n")
        with pytest.raises(ParseError):
            load_ground_truth(path)


class TestGroundTruthResampling:
    def test_hr_labels_nearest_lookup(self):
        times = np.arange(0.0, 31.0, 1.0)
        values = 60.0 + times
        gt = GroundTruth(kind="hr_series", times=times, values=values)
        plan = plan_windows(900, 30.0, 10.0, 5.0)
        series = gt_to_hr_series(gt, plan)
        np.testing.assert_allclose(series.times, [5.0, 10.0, 15.0, 20.0, 25.0])
        np.testing.assert_allclose(series.bpm, [65.0, 70.0, 75.0, 80.0, 85.0])

    def test_coverage_error_when_labels_end_early(self):
        # labels to 25 s cannot cover a 30 s plan
        times = np.arange(0.0, 25.5, 1.0)
        gt = GroundTruth(kind="hr_series", times=times,
                         values=np.full_like(times, 70.0))
        plan = plan_windows(900, 30.0, 10.0, 5.0)
        with pytest.raises(CoverageError):
            gt_to_hr_series(gt, plan)

    def test_ppg_waveform_resampled_through_fft(self):
        fps_gt = 60.0
        t = np.arange(0.0, 30.0, 1.0 / fps_gt)
        ppg = np.sin(2.0 * np.pi * 1.2 * t)
        gt = GroundTruth(kind="raw_ppg", times=t, values=ppg, fps_gt=fps_gt)
        plan = plan_windows(900, 30.0, 10.0, 5.0)
        series = gt_to_hr_series(gt, plan)
        np.testing.assert_allclose(series.bpm, 72.0, atol=0.2)

    def test_midpoints_without_plan(self):
        times = np.arange(0.0, 31.0, 1.0)
        gt = GroundTruth(kind="hr_series", times=times,
                         values=np.full_like(times, 64.0))
        series = gt_hr_at_midpoints(gt, np.array([5.0, 15.0, 25.0]), 10.0)
        np.testing.assert_allclose(series.bpm, 64.0)
