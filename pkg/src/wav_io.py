"""
WAV reader/writer for wavguard.

Only RIFF PCM, 16-bit signed, mono is accepted. Integer samples map to
amplitude by s / 32768; no resampling is ever performed.
"""

import logging
from pathlib import Path
from typing import Optional, Union

import numpy as np
from scipy.io import wavfile

from .signal_core import Waveform

logger = logging.getLogger(__name__)

PCM_SCALE = 32768.0

PathLike = Union[str, Path]


class WavFormatError(ValueError):
    """Raised for WAV files outside the supported PCM16 mono format."""


def read_wav(path: PathLike, expected_rate: Optional[int] = None) -> Waveform:
    """Read a PCM16 mono WAV file into a Waveform."""
    path = Path(path)
    try:
        rate, data = wavfile.read(str(path))
    except FileNotFoundError:
        raise
    except ValueError as e:
        raise WavFormatError(f"{path}: not a readable RIFF/WAVE file ({e})") from e

    if data.dtype != np.int16:
        raise WavFormatError(f"{path}: expected 16-bit PCM, got dtype {data.dtype}")
    if data.ndim != 1:
        raise WavFormatError(f"{path}: expected mono, got {data.shape[1]} channels")
    if expected_rate is not None and rate != expected_rate:
        raise WavFormatError(f"{path}: sample rate {rate} Hz does not match required {expected_rate} Hz")

    logger.debug(f"Read {path.name}: {data.size} samples at {rate} Hz")
    return Waveform(data.astype(np.float64) / PCM_SCALE, int(rate))


def to_pcm16(w: Waveform) -> np.ndarray:
    scaled = np.round(w.samples * PCM_SCALE)
    return np.clip(scaled, -PCM_SCALE, PCM_SCALE - 1).astype(np.int16)


def write_wav(path: PathLike, w: Waveform):
    """Write a Waveform as PCM16 mono."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    wavfile.write(str(path), w.sample_rate_hz, to_pcm16(w))
    logger.debug(f"Wrote {path.name}: {len(w)} samples at {w.sample_rate_hz} Hz")
