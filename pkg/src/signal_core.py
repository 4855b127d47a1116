"""
Signal core for wavguard.

Shared building blocks for every other module:
- Waveform container (mono, amplitudes in [-1, 1])
- 8-bit mu-law companding codec with bin-center decoding
- Segment tiling used by segment-wise detection
"""

import logging
from dataclasses import dataclass
from typing import NewType, Union

import numpy as np

logger = logging.getLogger(__name__)

DEFAULT_SAMPLE_RATE = 22050
MULAW_MU = 255
MULAW_CHANNELS = 256

MuLawCode = NewType("MuLawCode", int)

ArrayLike = Union[np.ndarray, list, tuple]


@dataclass(frozen=True, eq=False)
class Waveform:
    """Mono waveform. Samples are stored read-only."""
    samples: np.ndarray
    sample_rate_hz: int = DEFAULT_SAMPLE_RATE

    def __post_init__(self):
        samples = np.array(self.samples, dtype=np.float64).reshape(-1)
        if self.sample_rate_hz <= 0:
            raise ValueError(f"sample_rate_hz must be positive, got {self.sample_rate_hz}")
        if samples.size and not np.all(np.isfinite(samples)):
            raise ValueError("Waveform samples must be finite")
        if samples.size and np.max(np.abs(samples)) > 1.0:
            raise ValueError("Waveform samples must lie in [-1, 1]")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)

    @classmethod
    def from_array(cls, samples: ArrayLike, sample_rate_hz: int = DEFAULT_SAMPLE_RATE) -> "Waveform":
        """Build a waveform, clipping any overshoot to [-1, 1]."""
        return cls(np.clip(np.asarray(samples, dtype=np.float64), -1.0, 1.0), sample_rate_hz)

    def __len__(self) -> int:
        return int(self.samples.size)

    @property
    def duration_s(self) -> float:
        return len(self) / self.sample_rate_hz

    @property
    def peak(self) -> float:
        return float(np.max(np.abs(self.samples))) if len(self) else 0.0

    @property
    def rms(self) -> float:
        return float(np.sqrt(np.mean(self.samples ** 2))) if len(self) else 0.0

    def slice(self, span: "SegmentSpec") -> np.ndarray:
        span.check_within(len(self))
        return self.samples[span.start:span.end]


@dataclass(frozen=True)
class SegmentSpec:
    """Half-open sample span [start, start + length)."""
    start: int
    length: int

    def __post_init__(self):
        if self.start < 0:
            raise ValueError(f"Segment start must be >= 0, got {self.start}")
        if self.length <= 0:
            raise ValueError(f"Segment length must be > 0, got {self.length}")

    @property
    def end(self) -> int:
        return self.start + self.length

    def check_within(self, total: int):
        if self.end > total:
            raise ValueError(f"Segment [{self.start}, {self.end}) exceeds waveform length {total}")

    def overlap(self, other: "SegmentSpec") -> int:
        return max(0, min(self.end, other.end) - max(self.start, other.start))


def _compand(x: np.ndarray) -> np.ndarray:
    return np.sign(x) * np.log1p(MULAW_MU * np.abs(x)) / np.log1p(MULAW_MU)


def _expand(u: np.ndarray) -> np.ndarray:
    return np.sign(u) * ((1.0 + MULAW_MU) ** np.abs(u) - 1.0) / MULAW_MU


def mulaw_encode_array(x: ArrayLike) -> np.ndarray:
    """Vectorized mu-law encode. Out-of-range input is clipped to [-1, 1]."""
    x = np.clip(np.asarray(x, dtype=np.float64), -1.0, 1.0)
    codes = np.floor((_compand(x) + 1.0) / 2.0 * MULAW_CHANNELS)
    return np.clip(codes, 0, MULAW_CHANNELS - 1).astype(np.int64)


def mulaw_decode_array(codes: ArrayLike) -> np.ndarray:
    """Vectorized bin-center mu-law decode."""
    codes = np.asarray(codes, dtype=np.int64)
    if codes.size and (codes.min() < 0 or codes.max() >= MULAW_CHANNELS):
        raise ValueError("mu-law codes must lie in [0, 255]")
    u = (codes + 0.5) / (MULAW_CHANNELS / 2) - 1.0
    return _expand(u)


def mulaw_encode(x: float) -> MuLawCode:
    return MuLawCode(int(mulaw_encode_array(np.array([x]))[0]))


def mulaw_decode(code: int) -> float:
    if not 0 <= int(code) < MULAW_CHANNELS:
        raise ValueError(f"mu-law code out of range: {code}")
    return float(MULAW_LEVELS[int(code)])


def mulaw_bin_edges() -> np.ndarray:
    """Amplitude boundaries of the 256 quantization bins (257 values)."""
    return _expand(np.linspace(-1.0, 1.0, MULAW_CHANNELS + 1))


def mulaw_bin_width(x: float) -> float:
    """Width of the quantization bin that x falls into."""
    code = mulaw_encode(x)
    return float(MULAW_BIN_WIDTHS[code])


def mulaw_roundtrip(w: Waveform) -> Waveform:
    decoded = mulaw_decode_array(mulaw_encode_array(w.samples))
    return Waveform(decoded, w.sample_rate_hz)


# Reconstruction levels d(0) < d(1) < ... < d(255)
MULAW_LEVELS = mulaw_decode_array(np.arange(MULAW_CHANNELS))
MULAW_LEVELS.setflags(write=False)
MULAW_BIN_WIDTHS = np.diff(mulaw_bin_edges())
MULAW_BIN_WIDTHS.setflags(write=False)


def segments_for_length(total: int, seg_len: int) -> list[SegmentSpec]:
    """Tile [0, total) into consecutive spans; the last one may be shorter."""
    if seg_len <= 0:
        raise ValueError(f"seg_len must be > 0, got {seg_len}")
    return [
        SegmentSpec(start, min(seg_len, total - start))
        for start in range(0, total, seg_len)
    ]


def segments_of(w: Waveform, seg_len: int) -> list[SegmentSpec]:
    return segments_for_length(len(w), seg_len)
