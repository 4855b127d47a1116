"""
Fixed-weight gated toy cell.

One gated-activation layer over the history ring and the conditioning vector:

    z      = tanh(h @ Wf + c @ Vf) * sigmoid(h @ Wg + c @ Vg)
    logits = z @ Wo

No training happens; all weights are drawn from a seeded RNG.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import expit, softmax

from ..constraint import CategoricalDistribution
from ..signal_core import MULAW_CHANNELS
from .base import DEFAULT_CONDITIONING_DIM, DEFAULT_RECEPTIVE_FIELD, BaseGenerator, GeneratorState

DEFAULT_HIDDEN_DIM = 32


@dataclass(frozen=True, eq=False)
class ToyCellWeights:
    filter_input: np.ndarray  # r x d
    gate_input: np.ndarray    # r x d
    filter_cond: np.ndarray   # c x d
    gate_cond: np.ndarray     # c x d
    output: np.ndarray        # d x 256

    def __post_init__(self):
        r, d = self.filter_input.shape
        c = self.filter_cond.shape[0]
        expected = {
            "gate_input": (r, d),
            "filter_cond": (c, d),
            "gate_cond": (c, d),
            "output": (d, MULAW_CHANNELS),
        }
        for name, shape in expected.items():
            if getattr(self, name).shape != shape:
                raise ValueError(f"{name} has shape {getattr(self, name).shape}, expected {shape}")
        for name in ("filter_input", "gate_input", "filter_cond", "gate_cond", "output"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise ValueError(f"{name} contains non-finite entries")

    @property
    def receptive_field(self) -> int:
        return int(self.filter_input.shape[0])

    @property
    def conditioning_dim(self) -> int:
        return int(self.filter_cond.shape[0])

    @classmethod
    def from_seed(cls, seed: int, receptive_field: int = DEFAULT_RECEPTIVE_FIELD,
                  conditioning_dim: int = DEFAULT_CONDITIONING_DIM,
                  hidden_dim: int = DEFAULT_HIDDEN_DIM) -> "ToyCellWeights":
        """Weights scaled by 1/sqrt(fan_in), reproducible from (seed, dimensions)."""
        rng = np.random.default_rng([seed, receptive_field, conditioning_dim, hidden_dim])
        r, c, d = receptive_field, conditioning_dim, hidden_dim

        def draw(rows: int, cols: int) -> np.ndarray:
            return rng.standard_normal((rows, cols)) / np.sqrt(rows)

        return cls(
            filter_input=draw(r, d),
            gate_input=draw(r, d),
            filter_cond=draw(c, d),
            gate_cond=draw(c, d),
            output=draw(d, MULAW_CHANNELS),
        )

    @classmethod
    def zeros(cls, receptive_field: int = DEFAULT_RECEPTIVE_FIELD,
              conditioning_dim: int = DEFAULT_CONDITIONING_DIM,
              hidden_dim: int = DEFAULT_HIDDEN_DIM) -> "ToyCellWeights":
        r, c, d = receptive_field, conditioning_dim, hidden_dim
        return cls(
            filter_input=np.zeros((r, d)),
            gate_input=np.zeros((r, d)),
            filter_cond=np.zeros((c, d)),
            gate_cond=np.zeros((c, d)),
            output=np.zeros((d, MULAW_CHANNELS)),
        )


def toy_distribution(w: ToyCellWeights, s: GeneratorState) -> CategoricalDistribution:
    if s.history.size != w.receptive_field:
        raise ValueError(f"history has {s.history.size} samples, weights expect {w.receptive_field}")
    if s.conditioning.size != w.conditioning_dim:
        raise ValueError(f"conditioning has {s.conditioning.size} values, weights expect {w.conditioning_dim}")

    filt = np.tanh(s.history @ w.filter_input + s.conditioning @ w.filter_cond)
    gate = expit(s.history @ w.gate_input + s.conditioning @ w.gate_cond)
    logits = (filt * gate) @ w.output
    return CategoricalDistribution(softmax(logits))


class ToyCellGenerator(BaseGenerator):
    """Generator driven by a single fixed-weight gated cell."""

    def __init__(self, weights: ToyCellWeights, conditioning=None, greedy: bool = False):
        if conditioning is None:
            conditioning = np.zeros(weights.conditioning_dim)
        super().__init__(receptive_field=weights.receptive_field,
                         conditioning=conditioning, greedy=greedy)
        self.weights = weights

    @classmethod
    def from_seed(cls, seed: int, receptive_field: int = DEFAULT_RECEPTIVE_FIELD,
                  conditioning_dim: int = DEFAULT_CONDITIONING_DIM,
                  hidden_dim: int = DEFAULT_HIDDEN_DIM) -> "ToyCellGenerator":
        weights = ToyCellWeights.from_seed(seed, receptive_field, conditioning_dim, hidden_dim)
        # conditioning stands in for per-utterance auxiliary features
        conditioning = np.random.default_rng([seed, 1]).standard_normal(conditioning_dim) * 0.5
        return cls(weights, conditioning=conditioning)

    @property
    def name(self) -> str:
        return "toy"

    def distribution(self, state: GeneratorState) -> CategoricalDistribution:
        return toy_distribution(self.weights, state)
