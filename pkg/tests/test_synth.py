"""Synthetic trace generator: determinism, label exactness, model structure."""

from __future__ import annotations

import numpy as np
import pytest

from prism_rppg import SpecError, SynthSpec, generate, plan_windows, save_trace
from prism_rppg.synth import HrTrajectory


def _spec(**overrides) -> SynthSpec:
    base = {"duration": 40.0, "fps": 30.0, "hr": 72.0, "seed": 3}
    base.update(overrides)
    return SynthSpec.from_dict(base)


class TestTrajectories:
    def test_constant(self):
        hr = HrTrajectory.from_spec(72.0)
        t = np.linspace(0.0, 30.0, 7)
        np.testing.assert_array_equal(hr.bpm_at(t, 30.0), 72.0)

    def test_chirp_is_linear_in_time(self):
        hr = HrTrajectory.from_spec({"kind": "chirp", "start_bpm": 60.0,
                                     "end_bpm": 90.0})
        t = np.array([0.0, 15.0, 30.0])
        np.testing.assert_allclose(hr.bpm_at(t, 30.0), [60.0, 75.0, 90.0])

    def test_piecewise_interpolates(self):
        hr = HrTrajectory.from_spec({"kind": "piecewise",
                                     "points": [[0.0, 60.0], [10.0, 80.0],
                                                [20.0, 80.0]]})
        t = np.array([0.0, 5.0, 10.0, 15.0, 20.0])
        np.testing.assert_allclose(hr.bpm_at(t, 20.0), [60.0, 70.0, 80.0,
                                                        80.0, 80.0])

    def test_phase_derivative_matches_rate(self):
        # dphi/dt = 2 pi f for every trajectory kind
        kinds = (
            HrTrajectory.from_spec(72.0),
            HrTrajectory.from_spec({"kind": "chirp", "start_bpm": 60.0,
                                    "end_bpm": 90.0}),
            HrTrajectory.from_spec({"kind": "piecewise",
                                    "points": [[0.0, 60.0], [15.0, 75.0],
                                               [30.0, 66.0]]}),
        )
        t = np.arange(0.0, 30.0, 1.0 / 300.0)
        for hr in kinds:
            phase = hr.phase_at(t, 30.0)
            freq = np.gradient(phase, t) / (2.0 * np.pi)
            want = hr.bpm_at(t, 30.0) / 60.0
            np.testing.assert_allclose(freq[5:-5], want[5:-5], rtol=5e-3)

    def test_bad_kind_rejected(self):
        with pytest.raises(SpecError):
            HrTrajectory.from_spec({"kind": "random_walk"})


class TestSpecParsing:
    def test_unknown_field_rejected(self):
        with pytest.raises(SpecError, match="unknown"):
            SynthSpec.from_dict({"duration": 30.0, "fps": 30.0, "hr": 72.0,
                                 "amplitude": 0.01})

    def test_required_fields(self):
        with pytest.raises(SpecError):
            SynthSpec.from_dict({"duration": 30.0, "fps": 30.0})

    def test_per_channel_values_as_mapping_or_triple(self):
        a = _spec(pulse_amplitude={"r": 0.001, "g": 0.01, "b": 0.005})
        assert a.pulse_amplitude == (0.001, 0.01, 0.005)
        b = _spec(pulse_amplitude=[0.001, 0.01, 0.005])
        assert b.pulse_amplitude == (0.001, 0.01, 0.005)
        with pytest.raises(SpecError):
            _spec(pulse_amplitude=[0.001, 0.01])

    def test_drift_schema_checked(self):
        with pytest.raises(SpecError, match="channel"):
            _spec(drift={"x": {"kind": "exponential", "rate": 0.01}})
        with pytest.raises(SpecError, match="kind"):
            generate(_spec(drift={"g": {"kind": "sawtooth"}}))

    def test_round_trip_through_dict(self):
        spec = _spec(harmonic_ratio=2.0,
                     drift={"g": {"kind": "exponential", "rate": -0.01}})
        again = SynthSpec.from_dict(spec.to_dict())
        assert again == spec

    def test_hr_bounds_enforced(self):
        with pytest.raises(SpecError):
            generate(_spec(hr=20.0))
        with pytest.raises(SpecError):
            generate(_spec(hr=300.0))

    def test_duration_must_allow_windows(self):
        with pytest.raises(SpecError):
            generate(_spec(duration=15.0))


class TestGeneration:
    def test_deterministic_bytes(self, tmp_path):
        spec = _spec(noise_sigma=0.002,
                     drift={"g": {"kind": "exponential", "rate": -0.01}})
        t1, _ = generate(spec)
        t2, _ = generate(spec)
        p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
        save_trace(t1, p1)
        save_trace(t2, p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_seed_override_changes_noise(self):
        spec = _spec(noise_sigma=0.002)
        t1, _ = generate(spec)
        t2, _ = generate(spec, seed=99)
        assert not np.array_equal(t1.samples, t2.samples)

    def test_labels_sit_on_plan_midpoints(self):
        spec = _spec(duration=60.0,
                     hr={"kind": "chirp", "start_bpm": 60.0, "end_bpm": 90.0},
                     window_length=10.0, hop=5.0)
        trace, gt = generate(spec)
        plan = plan_windows(len(trace), trace.fps, 10.0, 5.0)
        np.testing.assert_array_equal(gt.times, plan.midpoint_times)
        want = spec.hr.bpm_at(plan.midpoint_times, 60.0)
        np.testing.assert_array_equal(gt.values, want)

    def test_noise_free_channels_follow_model(self):
        # without noise or drift the channel is exactly
        # base * (1 + amp * sin(phase))
        spec = _spec(pulse_amplitude=[0.004, 0.01, 0.005])
        trace, _ = generate(spec)
        t = np.arange(len(trace)) / spec.fps
        phase = spec.hr.phase_at(t, spec.duration)
        for c, (base, amp) in enumerate(zip(spec.base, spec.pulse_amplitude)):
            want = base * (1.0 + amp * np.sin(phase))
            np.testing.assert_allclose(trace.samples[:, c], want, rtol=1e-12)

    def test_harmonic_ratio_scales_second_partial(self):
        spec = _spec(duration=60.0, harmonic_ratio=3.0)
        trace, _ = generate(spec)
        g = trace.samples[:, 1]
        g = g / np.mean(g) - 1.0
        spectrum = np.abs(np.fft.rfft(g * np.hanning(len(g)), 2 ** 14))
        freqs = np.fft.rfftfreq(2 ** 14, 1.0 / 30.0)
        fund = spectrum[np.argmin(np.abs(freqs - 1.2))]
        harm = spectrum[np.argmin(np.abs(freqs - 2.4))]
        assert harm / fund == pytest.approx(3.0, rel=0.05)

    def test_additive_drift_uses_sum_not_product(self):
        drift = {"g": {"kind": "sinusoid", "amplitude": 0.05, "freq_hz": 0.05}}
        mult, _ = generate(_spec(drift=drift))
        add, _ = generate(_spec(drift=drift, additive_drift=True))
        assert not np.array_equal(mult.samples, add.samples)
        # labels are drift-independent
        _, gt_m = generate(_spec(drift=drift))
        _, gt_a = generate(_spec(drift=drift, additive_drift=True))
        np.testing.assert_array_equal(gt_m.values, gt_a.values)

    def test_nonpositive_samples_rejected(self):
        drift = {"g": {"kind": "sinusoid", "amplitude": 1.5, "freq_hz": 0.05}}
        with pytest.raises(SpecError):
            generate(_spec(drift=drift))

    def test_regime_switch_steps_and_ramps(self):
        step = {"g": {"kind": "regime_switch", "time_s": 20.0, "factor": 1.1,
                      "ramp_s": 0.0}}
        trace, _ = generate(_spec(drift=step))
        g = trace.samples[:, 1]
        i = int(20.0 * 30.0)
        assert np.mean(g[i + 30:i + 90]) / np.mean(g[:60]) == pytest.approx(1.1,
                                                                            rel=0.02)
