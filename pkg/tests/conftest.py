"""Pytest fixtures for wavguard tests."""

import tempfile
from pathlib import Path

import numpy as np
import pytest

from src.signal_core import Waveform

RATE = 22050


def sine(amplitude: float = 0.5, freq_hz: float = 440.0, n: int = 8192, rate: int = RATE,
         phase: float = 0.0) -> np.ndarray:
    t = np.arange(n) / rate
    return amplitude * np.sin(2 * np.pi * freq_hz * t + phase)


@pytest.fixture
def temp_dir():
    """Create a temporary directory for test files."""
    with tempfile.TemporaryDirectory() as tmpdir:
        yield Path(tmpdir)


@pytest.fixture
def sine_wave():
    """0.5-amplitude 440 Hz sine, 8192 samples."""
    return Waveform(sine())


@pytest.fixture
def silence():
    return Waveform(np.zeros(8192))


@pytest.fixture
def harmonic_reference():
    """Amplitude-modulated harmonic tone, 8000 samples, peak 0.3."""
    from src.verification import synth_reference

    wave = synth_reference(np.random.default_rng(11))
    x = wave.samples[:8000]
    return Waveform(x * 0.3 / np.max(np.abs(x)))


@pytest.fixture
def small_corpus():
    """Ten utterances, half of them collapsed."""
    from src.verification import synth_corpus

    return synth_corpus(10, 0.5, seed=3)
