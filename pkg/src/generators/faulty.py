"""
Collapse injection.

Two collapse shapes are modelled:
- type I: a sustained burst of broadband noise far louder than the reference
- type II: a handful of short, very large impulses

`faulty_generate` applies them to a reference waveform directly (the
verification corpus); `CollapseInjector` applies them at the distribution
level of a wrapped generator so guarded regeneration can suppress them.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from ..constraint import CategoricalDistribution
from ..signal_core import MULAW_BIN_WIDTHS, MULAW_CHANNELS, MULAW_LEVELS, SegmentSpec, Waveform, mulaw_encode
from .base import BaseGenerator, GeneratorState

logger = logging.getLogger(__name__)

MIN_IMPULSE_SLOT = 8
MAX_IMPULSE_WIDTH = 5


class CollapseKind(Enum):
    CLEAN = "clean"
    TYPE_I = "typeI"
    TYPE_II = "typeII"


@dataclass(frozen=True)
class CollapsePlan:
    kind: CollapseKind
    region: SegmentSpec
    amplitude_factor: float = 3.0
    impulse_count: int = 3  # type II only

    def __post_init__(self):
        if self.kind == CollapseKind.CLEAN:
            raise ValueError("A collapse plan needs kind typeI or typeII")
        if not 1 < self.amplitude_factor <= 10:
            raise ValueError(f"amplitude_factor must lie in (1, 10], got {self.amplitude_factor}")
        if self.kind == CollapseKind.TYPE_II and not 3 <= self.impulse_count <= 20:
            raise ValueError(f"impulse_count must lie in [3, 20], got {self.impulse_count}")


@dataclass(frozen=True)
class Impulse:
    start: int
    width: int
    value: float


def plan_impulses(plan: CollapsePlan, peak: float, rng: np.random.Generator) -> list[Impulse]:
    """
    Place impulse_count impulses inside the plan region, one per equal slot.

    Each impulse leaves at least one untouched sample before the next slot so
    impulses never merge.
    """
    count = plan.impulse_count
    slot = plan.region.length // count
    if slot < MIN_IMPULSE_SLOT:
        raise ValueError(
            f"Region of {plan.region.length} samples is too short for {count} impulses"
        )

    impulses = []
    for i in range(count):
        width = int(rng.integers(1, MAX_IMPULSE_WIDTH + 1))
        offset = int(rng.integers(0, slot - width))
        height = peak * max(2.0, plan.amplitude_factor) * rng.uniform(1.0, 1.5)
        sign = 1.0 if rng.random() < 0.5 else -1.0
        impulses.append(Impulse(plan.region.start + i * slot + offset, width, sign * height))
    return impulses


def faulty_generate(ref: Waveform, plan: Optional[CollapsePlan] = None,
                    perturb_db: float = -30.0, seed: int = 0) -> Waveform:
    """Perturbed copy of `ref` with the planned collapse applied: type I replaces
    the region with loud noise, type II adds impulses on top of the signal."""
    rng = np.random.default_rng(seed)
    noise_std = ref.rms * 10.0 ** (perturb_db / 20.0)
    cand = ref.samples + rng.normal(0.0, noise_std, len(ref))

    if plan is not None:
        plan.region.check_within(len(ref))
        peak = ref.peak
        if peak == 0:
            raise ValueError("Cannot scale a collapse against a silent reference")
        region = slice(plan.region.start, plan.region.end)
        if plan.kind == CollapseKind.TYPE_I:
            amplitude = plan.amplitude_factor * peak
            cand[region] = rng.uniform(-amplitude, amplitude, plan.region.length)
        else:
            for imp in plan_impulses(plan, peak, rng):
                # impulses add to the signal, pushing away from zero on the reference's side
                direction = 1.0 if ref.samples[imp.start + imp.width // 2] >= 0 else -1.0
                cand[imp.start:imp.start + imp.width] += direction * abs(imp.value)
        logger.debug(f"Injected {plan.kind.value} at [{plan.region.start}, {plan.region.end})")

    return Waveform.from_array(cand, ref.sample_rate_hz)


def uniform_amplitude_probs(amplitude: float) -> np.ndarray:
    """Distribution over mu-law bins that is uniform in amplitude on [-amplitude, amplitude]."""
    widths = MULAW_BIN_WIDTHS
    inside = np.abs(MULAW_LEVELS) <= min(amplitude, 1.0)
    if not inside.any():
        inside[np.argmin(np.abs(MULAW_LEVELS))] = True
    weights = np.where(inside, widths, 0.0)
    return weights / weights.sum()


class CollapseInjector(BaseGenerator):
    """Wraps a generator and blends a planned collapse into its distribution."""

    DEFAULT_WEIGHTS = {CollapseKind.TYPE_I: 0.9, CollapseKind.TYPE_II: 0.95}

    def __init__(self, inner: BaseGenerator, plan: CollapsePlan, peak: float,
                 seed: int = 0, weight: Optional[float] = None):
        super().__init__(receptive_field=inner.receptive_field,
                         conditioning=inner.conditioning, greedy=inner.greedy)
        if peak <= 0:
            raise ValueError(f"peak must be > 0, got {peak}")
        weight = self.DEFAULT_WEIGHTS[plan.kind] if weight is None else weight
        if not 0 <= weight <= 1:
            raise ValueError(f"weight must lie in [0, 1], got {weight}")
        self.inner = inner
        self.plan = plan
        self.weight = weight

        self._noise = uniform_amplitude_probs(plan.amplitude_factor * peak)
        self._impulses: dict[int, int] = {}
        if plan.kind == CollapseKind.TYPE_II:
            for imp in plan_impulses(plan, peak, np.random.default_rng(seed)):
                code = mulaw_encode(imp.value)
                for n in range(imp.start, imp.start + imp.width):
                    self._impulses[n] = code

    @property
    def name(self) -> str:
        return f"{self.inner.name}+{self.plan.kind.value}"

    def initial_state(self, seed: int) -> GeneratorState:
        return self.inner.initial_state(seed)

    def distribution(self, state: GeneratorState) -> CategoricalDistribution:
        p = self.inner.distribution(state)
        n = state.position
        if not self.plan.region.start <= n < self.plan.region.end:
            return p
        if self.plan.kind == CollapseKind.TYPE_I:
            fault = self._noise
        elif n in self._impulses:
            fault = np.zeros(MULAW_CHANNELS)
            fault[self._impulses[n]] = 1.0
        else:
            return p
        mixed = (1.0 - self.weight) * p.probs + self.weight * fault
        return CategoricalDistribution(mixed / mixed.sum())
