"""Reference-tracking generator: a well-behaved stand-in for a trained vocoder."""

import numpy as np

from ..constraint import CategoricalDistribution
from ..signal_core import MULAW_LEVELS, Waveform
from .base import DEFAULT_RECEPTIVE_FIELD, BaseGenerator, GeneratorState


def _normalized_gaussian(center: float, spread: float) -> np.ndarray:
    log_w = -((MULAW_LEVELS - center) ** 2) / (2.0 * spread * spread)
    w = np.exp(log_w - log_w.max())
    return w / w.sum()


class ReferenceTrackingGenerator(BaseGenerator):
    """
    Puts its mass near the reference sample at the current position.

    The distribution is a two-component Gaussian mixture over the decode
    levels: a narrow core of width `spread` and a wide shoulder of width
    `wide_spread` carrying `wide_weight` of the mass. Past the end of the
    reference the target is silence.
    """

    def __init__(self, ref: Waveform, spread: float = 0.002, wide_spread: float = 0.01,
                 wide_weight: float = 0.02, receptive_field: int = DEFAULT_RECEPTIVE_FIELD,
                 greedy: bool = False):
        if spread <= 0 or wide_spread <= 0:
            raise ValueError("spread and wide_spread must be > 0")
        if not 0 <= wide_weight <= 1:
            raise ValueError(f"wide_weight must lie in [0, 1], got {wide_weight}")
        super().__init__(receptive_field=receptive_field, greedy=greedy)
        self.ref = ref
        self.spread = spread
        self.wide_spread = wide_spread
        self.wide_weight = wide_weight

    @property
    def name(self) -> str:
        return "tracking"

    def distribution(self, state: GeneratorState) -> CategoricalDistribution:
        target = float(self.ref.samples[state.position]) if state.position < len(self.ref) else 0.0
        probs = (1.0 - self.wide_weight) * _normalized_gaussian(target, self.spread)
        if self.wide_weight > 0:
            probs = probs + self.wide_weight * _normalized_gaussian(target, self.wide_spread)
        return CategoricalDistribution(probs / probs.sum())
