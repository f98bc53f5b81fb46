"""Shared fixtures for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from prism_rppg import SynthSpec, generate, plan_windows


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


@pytest.fixture
def clean_trace():
    """60 s constant 72 bpm trace with mild drift and light noise."""
    drift = {c: {"kind": "exponential", "rate": -0.005} for c in ("r", "g", "b")}
    spec = SynthSpec.from_dict({
        "duration": 60.0, "fps": 30.0, "hr": 72.0,
        "noise_sigma": 0.002, "drift": drift, "seed": 42,
    })
    return generate(spec)


@pytest.fixture
def clean_plan(clean_trace):
    trace, _ = clean_trace
    return plan_windows(len(trace), trace.fps, 10.0)
