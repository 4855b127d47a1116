"""
Envelope detection for wavguard.

Three steps, applied to each detection segment:
1. Rectify (absolute value) or take the analytic-signal magnitude
2. Peak-hold over non-overlapping slots
3. Causal 2nd-order Butterworth low-pass

The difference between a candidate envelope and the reference envelope is the
collapse statistic.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import signal

from .signal_core import SegmentSpec, Waveform

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EnvelopeParams:
    """Envelope detector settings."""
    peak_window: int = 200
    lpf_cutoff_hz: float = 300.0
    use_hilbert: bool = True
    context_pad: int = 400

    def __post_init__(self):
        if self.peak_window < 1:
            raise ValueError(f"peak_window must be >= 1, got {self.peak_window}")
        if self.lpf_cutoff_hz <= 0:
            raise ValueError(f"lpf_cutoff_hz must be > 0, got {self.lpf_cutoff_hz}")
        if self.context_pad < 0:
            raise ValueError(f"context_pad must be >= 0, got {self.context_pad}")

    def check_rate(self, sample_rate_hz: float):
        if not self.lpf_cutoff_hz < sample_rate_hz / 2:
            raise ValueError(
                f"lpf_cutoff_hz {self.lpf_cutoff_hz} must be below Nyquist ({sample_rate_hz / 2} Hz)"
            )


@dataclass(frozen=True, eq=False)
class Envelope:
    values: np.ndarray
    params: EnvelopeParams = field(default_factory=EnvelopeParams)

    def __len__(self) -> int:
        return int(self.values.size)


def analytic_magnitude(x: np.ndarray) -> np.ndarray:
    """Magnitude of the analytic signal, FFT length rounded up to a power of two."""
    x = np.asarray(x, dtype=np.float64)
    n = x.size
    if n == 0:
        raise ValueError("analytic_magnitude requires a nonempty input")
    nfft = 1 << (n - 1).bit_length()
    return np.abs(signal.hilbert(x, N=nfft))[:n]


def rectify(x: np.ndarray) -> np.ndarray:
    return np.abs(np.asarray(x, dtype=np.float64))


def peak_hold(x: np.ndarray, window: int) -> np.ndarray:
    """Replace each non-overlapping slot of `window` samples with its maximum."""
    if window < 1:
        raise ValueError(f"window must be >= 1, got {window}")
    x = np.asarray(x, dtype=np.float64)
    n = x.size
    out = np.empty_like(x)
    full = (n // window) * window
    if full:
        slots = x[:full].reshape(-1, window).max(axis=1)
        out[:full] = np.repeat(slots, window)
    if full < n:
        # final short slot keeps its own maximum
        out[full:] = x[full:].max()
    return out


def design_lowpass(cutoff_hz: float, rate_hz: float) -> tuple[np.ndarray, np.ndarray]:
    """Biquad coefficients (b, a) of the 2nd-order Butterworth low-pass."""
    if not 0 < cutoff_hz < rate_hz / 2:
        raise ValueError(f"cutoff {cutoff_hz} Hz must lie in (0, {rate_hz / 2}) Hz")
    # scipy prewarps the analog prototype before the bilinear transform
    b, a = signal.butter(2, cutoff_hz, btype="low", fs=rate_hz)
    return b, a


def lowpass(x: np.ndarray, cutoff_hz: float, rate_hz: float) -> np.ndarray:
    b, a = design_lowpass(cutoff_hz, rate_hz)
    return signal.lfilter(b, a, np.asarray(x, dtype=np.float64))


def envelope_of_samples(x: np.ndarray, rate_hz: float, params: EnvelopeParams) -> np.ndarray:
    """Run the three detector steps on a raw sample block."""
    magnitude = analytic_magnitude(x) if params.use_hilbert else rectify(x)
    held = peak_hold(magnitude, params.peak_window)
    smoothed = lowpass(held, params.lpf_cutoff_hz, rate_hz)
    # the filter output of a nonnegative input can ring slightly below zero
    return np.maximum(smoothed, 0.0)


def extract_envelope(w: Waveform, span: SegmentSpec, params: EnvelopeParams) -> Envelope:
    """Envelope of `span`, computed with a zero-filled look-back context pad."""
    span.check_within(len(w))
    params.check_rate(w.sample_rate_hz)

    pad = params.context_pad
    available = min(pad, span.start)
    block = np.zeros(pad + span.length)
    block[pad - available:] = w.samples[span.start - available:span.end]

    values = envelope_of_samples(block, w.sample_rate_hz, params)[pad:]
    return Envelope(values=values, params=params)


def envelope_excess(cand: Envelope, ref: Envelope) -> float:
    """Largest amount by which the candidate envelope exceeds the reference."""
    if len(cand) != len(ref):
        raise ValueError(f"Envelope length mismatch: {len(cand)} vs {len(ref)}")
    if len(cand) == 0:
        raise ValueError("Cannot compare empty envelopes")
    return float(np.max(cand.values - ref.values))
