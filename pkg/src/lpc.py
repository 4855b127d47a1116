"""
Linear predictive analysis of the reference waveform.

Predictor convention: y_hat[n] = sum_i a_i * y[n - i]  (positive-sum form).
The reference is mu-law roundtripped before analysis so the predictor sees
the same quantization the generator produces. r[0] is raised by the
white-noise correction before the recursion, so a frame's residual variance
is never below correction * its power. The coefficients are then pulled
towards zero by bandwidth expansion, a_i *= gamma ** i, which widens the
formant peaks the predictor models.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import signal

from .signal_core import Waveform, mulaw_roundtrip

logger = logging.getLogger(__name__)

VARIANCE_FLOOR = 1e-8
WHITE_NOISE_CORRECTION = 0.01
BANDWIDTH_EXPANSION = 0.94


class DegenerateFrameError(ValueError):
    """Raised when a frame has no energy to predict from."""


@dataclass(frozen=True)
class LpcConfig:
    order: int = 16
    frame_len: int = 512
    frame_shift: int = 128
    window: str = "hamming"
    variance_floor: float = VARIANCE_FLOOR
    # fraction of r[0] added as white noise before the recursion
    white_noise_correction: float = WHITE_NOISE_CORRECTION
    # a_i is scaled by bandwidth_expansion ** i after the recursion
    bandwidth_expansion: float = BANDWIDTH_EXPANSION

    def __post_init__(self):
        if not 1 <= self.order < self.frame_len:
            raise ValueError(f"LPC order must satisfy 1 <= order < frame_len, got {self.order}")
        if not 1 <= self.frame_shift <= self.frame_len:
            raise ValueError(f"frame_shift must lie in [1, frame_len], got {self.frame_shift}")
        if self.variance_floor <= 0:
            raise ValueError(f"variance_floor must be > 0, got {self.variance_floor}")
        if not 0 <= self.white_noise_correction < 1:
            raise ValueError(
                f"white_noise_correction must lie in [0, 1), got {self.white_noise_correction}"
            )
        if not 0 < self.bandwidth_expansion <= 1:
            raise ValueError(f"bandwidth_expansion must lie in (0, 1], got {self.bandwidth_expansion}")

    def analysis_window(self) -> np.ndarray:
        return signal.get_window(self.window, self.frame_len, fftbins=False)


@dataclass(frozen=True, eq=False)
class LpcFrame:
    coeffs: np.ndarray
    residual_variance: float
    start: int
    length: int

    def __post_init__(self):
        if not np.isfinite(self.residual_variance) or self.residual_variance < 0:
            raise ValueError(f"residual_variance must be finite and >= 0, got {self.residual_variance}")

    @property
    def order(self) -> int:
        return int(self.coeffs.size)

    @property
    def center(self) -> int:
        return self.start + self.length // 2


@dataclass(frozen=True, eq=False)
class LpcAnalysis:
    frames: list[LpcFrame]
    config: LpcConfig = field(default_factory=LpcConfig)
    num_samples: int = 0

    def __len__(self) -> int:
        return len(self.frames)


def autocorrelate(frame: np.ndarray, max_lag: int) -> np.ndarray:
    """Biased autocorrelation r[k] = sum_t x[t] * x[t + k] for k = 0..max_lag."""
    x = np.asarray(frame, dtype=np.float64)
    n = x.size
    if not 0 <= max_lag < n:
        raise ValueError(f"max_lag must lie in [0, {n - 1}], got {max_lag}")
    return np.array([np.dot(x[:n - k], x[k:]) for k in range(max_lag + 1)])


def levinson_durbin(r: np.ndarray, order: int, energy_norm: float) -> tuple[np.ndarray, float]:
    """
    Solve the Toeplitz normal equations by the Levinson-Durbin recursion.

    Args:
        r: autocorrelation sequence r[0..], at least order + 1 values.
        order: predictor order.
        energy_norm: divisor that turns the final error energy into a
            per-sample power: the frame length for a rectangular frame,
            the window energy sum(w**2) for a tapered one.

    Returns:
        (coeffs a_1..a_order, residual_variance)
    """
    r = np.asarray(r, dtype=np.float64)
    if order < 1 or order > r.size - 1:
        raise ValueError(f"order must lie in [1, {r.size - 1}], got {order}")
    if not energy_norm > 0:
        raise ValueError(f"energy_norm must be > 0, got {energy_norm}")
    if not r[0] > 0:
        raise DegenerateFrameError(f"r[0] = {r[0]} is not positive")

    a = np.zeros(order)
    error = r[0]
    for i in range(order):
        acc = r[i + 1] - np.dot(a[:i], r[i:0:-1])
        k = acc / error
        # round-off can push a reflection coefficient a hair past the unit circle
        k = float(np.clip(k, -1.0, 1.0))
        a_prev = a[:i].copy()
        a[i] = k
        a[:i] = a_prev - k * a_prev[::-1]
        error *= (1.0 - k * k)

    return a, max(error, 0.0) / energy_norm


def analyze_reference(ref: Waveform, cfg: LpcConfig) -> LpcAnalysis:
    """Frame-wise LPC of the mu-law roundtripped reference."""
    if len(ref) < cfg.frame_len:
        raise ValueError(f"Reference has {len(ref)} samples, need at least frame_len={cfg.frame_len}")

    quantized = mulaw_roundtrip(ref).samples
    window = cfg.analysis_window()
    window_energy = float(np.dot(window, window))
    n_frames = (len(ref) - cfg.frame_len) // cfg.frame_shift + 1

    frames: list[LpcFrame] = []
    degenerate = 0
    for k in range(n_frames):
        start = k * cfg.frame_shift
        windowed = quantized[start:start + cfg.frame_len] * window
        r = autocorrelate(windowed, cfg.order)
        coeffs = np.zeros(cfg.order)
        variance = cfg.variance_floor
        # frames quieter than the floor are treated as silence
        if r[0] / window_energy > cfg.variance_floor:
            r[0] *= 1.0 + cfg.white_noise_correction
            try:
                coeffs, variance = levinson_durbin(r, cfg.order, energy_norm=window_energy)
                coeffs = coeffs * cfg.bandwidth_expansion ** np.arange(1, cfg.order + 1)
                variance = max(variance, cfg.variance_floor)
            except DegenerateFrameError:
                coeffs = np.zeros(cfg.order)
                variance = cfg.variance_floor
        else:
            degenerate += 1
        coeffs.setflags(write=False)
        frames.append(LpcFrame(coeffs=coeffs, residual_variance=float(variance),
                               start=start, length=cfg.frame_len))

    if degenerate:
        logger.debug(f"{degenerate}/{n_frames} LPC frames were silent; using zero predictor")
    return LpcAnalysis(frames=frames, config=cfg, num_samples=len(ref))


def frame_for_sample(a: LpcAnalysis, n: int) -> LpcFrame:
    """Frame whose center is nearest to sample n; ties go to the earlier frame."""
    if not a.frames:
        raise ValueError("LpcAnalysis has no frames")
    first_center = a.frames[0].center
    shift = a.config.frame_shift
    # ceil((n - c0) / shift - 1/2) in integer arithmetic
    k = (2 * (n - first_center) + shift - 1) // (2 * shift)
    k = min(max(k, 0), len(a.frames) - 1)
    return a.frames[k]


def predict_mean(frame: LpcFrame, history: np.ndarray) -> float:
    """mu_lpc = sum_i a_i * y[n - i], with `history` ordered oldest to newest."""
    history = np.asarray(history, dtype=np.float64)
    if history.size != frame.order:
        raise ValueError(f"history must hold {frame.order} samples, got {history.size}")
    mu = float(np.dot(frame.coeffs, history[::-1]))
    return min(max(mu, -1.0), 1.0)
