"""Base generator interface for autoregressive sample generation."""

import copy
import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..constraint import (
    MASK_FLOOR,
    SIGMA_FLOOR,
    CategoricalDistribution,
    GaussianMask,
    apply_constraint,
    gaussian_mask,
    sample_from,
)
from ..lpc import LpcAnalysis, frame_for_sample, predict_mean
from ..signal_core import mulaw_bin_width, mulaw_decode

logger = logging.getLogger(__name__)

DEFAULT_RECEPTIVE_FIELD = 64
DEFAULT_CONDITIONING_DIM = 8


@dataclass(eq=False)
class GeneratorState:
    """Everything a generation stream needs to continue from a sample index."""
    history: np.ndarray  # last r decoded amplitudes, oldest first
    conditioning: np.ndarray
    rng: np.random.Generator
    position: int = 0

    @property
    def receptive_field(self) -> int:
        return int(self.history.size)

    def push(self, y: float):
        self.history[:-1] = self.history[1:]
        self.history[-1] = y
        self.position += 1

    def copy(self) -> "GeneratorState":
        return copy.deepcopy(self)


@dataclass(frozen=True)
class Checkpoint:
    """Frozen copy of a GeneratorState taken at a segment boundary."""
    state: GeneratorState

    @classmethod
    def capture(cls, state: GeneratorState) -> "Checkpoint":
        return cls(state.copy())

    def restore(self) -> GeneratorState:
        # hand out a fresh copy so the checkpoint can be restored again
        return self.state.copy()


@dataclass(frozen=True)
class MaskSource:
    """LPC analysis plus the control factor used to constrain a segment."""
    analysis: LpcAnalysis
    rho: float
    mask_floor: float = MASK_FLOOR
    sigma_floor: float = SIGMA_FLOOR

    def __post_init__(self):
        if self.rho < 0:
            raise ValueError(f"rho must be >= 0, got {self.rho}")
        if self.sigma_floor <= 0:
            raise ValueError(f"sigma_floor must be > 0, got {self.sigma_floor}")

    def mask_at(self, position: int, history: np.ndarray) -> GaussianMask:
        """Gaussian mask around the LPC prediction for the sample at `position`."""
        frame = frame_for_sample(self.analysis, position)
        mu = predict_mean(frame, history[-frame.order:])
        # no narrower than the bin the prediction falls in
        sigma = max(math.sqrt(frame.residual_variance), self.sigma_floor, mulaw_bin_width(mu))
        return gaussian_mask(mu, sigma, self.mask_floor)


class BaseGenerator(ABC):
    """Abstract base class for sample-by-sample generators."""

    def __init__(self, receptive_field: int = DEFAULT_RECEPTIVE_FIELD,
                 conditioning: Optional[np.ndarray] = None, greedy: bool = False):
        if receptive_field < 1:
            raise ValueError(f"receptive_field must be >= 1, got {receptive_field}")
        self.receptive_field = receptive_field
        if conditioning is None:
            conditioning = np.zeros(DEFAULT_CONDITIONING_DIM)
        self.conditioning = np.asarray(conditioning, dtype=np.float64)
        self.greedy = greedy

    @property
    @abstractmethod
    def name(self) -> str:
        """Return the generator name identifier."""
        pass

    @abstractmethod
    def distribution(self, state: GeneratorState) -> CategoricalDistribution:
        """Next-sample distribution over the 256 mu-law levels."""
        pass

    def initial_state(self, seed: int) -> GeneratorState:
        """Zero-filled history at position 0 with a freshly seeded RNG."""
        return GeneratorState(
            history=np.zeros(self.receptive_field),
            conditioning=self.conditioning.copy(),
            rng=np.random.default_rng(seed),
            position=0,
        )

    def generate_segment(self, state: GeneratorState, length: int,
                         mask_source: Optional[MaskSource] = None) -> tuple[np.ndarray, GeneratorState]:
        """
        Generate `length` samples autoregressively.

        The input state is left untouched; the advanced state is returned
        alongside the decoded samples.
        """
        if length <= 0:
            raise ValueError(f"length must be > 0, got {length}")

        analysis = None
        if mask_source is not None:
            analysis = mask_source.analysis
            if state.position + length > analysis.num_samples:
                raise ValueError(
                    f"LPC analysis covers {analysis.num_samples} samples, "
                    f"generation needs {state.position + length}"
                )
            if analysis.config.order > state.receptive_field:
                raise ValueError(
                    f"LPC order {analysis.config.order} exceeds receptive field {state.receptive_field}"
                )

        state = state.copy()
        out = np.empty(length)
        for i in range(length):
            p = self.distribution(state)
            if analysis is not None and mask_source.rho > 0:
                mask = mask_source.mask_at(state.position, state.history)
                p = apply_constraint(p, mask, mask_source.rho)
            y = mulaw_decode(sample_from(p, state.rng, greedy=self.greedy))
            out[i] = y
            state.push(y)

        return out, state
