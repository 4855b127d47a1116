"""
LPC probability constraint for wavguard.

The generator's categorical distribution over the 256 mu-law levels is fused
with a Gaussian mask centred on the LPC prediction:

    out[b]  ~  p[b] * m[b] ** rho

Fusion runs in the log domain with max-subtraction so narrow masks do not
underflow.
"""

import logging
from dataclasses import dataclass

import numpy as np

from .signal_core import MULAW_CHANNELS, MULAW_LEVELS, MuLawCode

logger = logging.getLogger(__name__)

MASK_FLOOR = 1e-12
SIGMA_FLOOR = 1e-4  # sqrt of the LPC variance floor
SUM_TOLERANCE = 1e-9


def _check_probs(probs: np.ndarray, what: str):
    if probs.shape != (MULAW_CHANNELS,):
        raise ValueError(f"{what} must have {MULAW_CHANNELS} entries, got shape {probs.shape}")
    if np.any(probs < 0) or not np.all(np.isfinite(probs)):
        raise ValueError(f"{what} must be finite and nonnegative")
    total = float(np.sum(probs))
    if abs(total - 1.0) > SUM_TOLERANCE:
        raise ValueError(f"{what} must sum to 1, got {total!r}")


@dataclass(frozen=True, eq=False)
class CategoricalDistribution:
    probs: np.ndarray

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=np.float64)
        _check_probs(probs, "CategoricalDistribution")
        object.__setattr__(self, "probs", probs)

    @classmethod
    def uniform(cls) -> "CategoricalDistribution":
        return cls(np.full(MULAW_CHANNELS, 1.0 / MULAW_CHANNELS))

    @classmethod
    def from_weights(cls, weights: np.ndarray) -> "CategoricalDistribution":
        weights = np.asarray(weights, dtype=np.float64)
        total = weights.sum()
        if not total > 0:
            raise ValueError("Cannot normalize an all-zero weight vector")
        return cls(weights / total)


@dataclass(frozen=True, eq=False)
class GaussianMask:
    probs: np.ndarray
    mu: float
    sigma: float
    floor: float = MASK_FLOOR

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=np.float64)
        _check_probs(probs, "GaussianMask")
        if self.sigma <= 0:
            raise ValueError(f"sigma must be > 0, got {self.sigma}")
        if np.min(probs) < self.floor * (1.0 - SUM_TOLERANCE):
            raise ValueError(f"GaussianMask entries must be >= {self.floor}")
        object.__setattr__(self, "probs", probs)


@dataclass(frozen=True)
class RhoSchedule:
    """Escalating control factors tried on successive regenerations."""
    values: tuple[float, ...] = (0.01, 0.1, 1.0)

    def __post_init__(self):
        values = tuple(float(v) for v in self.values)
        if not values:
            raise ValueError("RhoSchedule needs at least one value")
        if any(v <= 0 for v in values):
            raise ValueError(f"rho values must be > 0, got {values}")
        if any(b <= a for a, b in zip(values, values[1:])):
            raise ValueError(f"rho values must be strictly increasing, got {values}")
        object.__setattr__(self, "values", values)

    @classmethod
    def parse(cls, text: str) -> "RhoSchedule":
        """Parse a comma-separated list such as '0.01,0.1,1'."""
        try:
            return cls(tuple(float(part) for part in text.split(",") if part.strip()))
        except ValueError as e:
            raise ValueError(f"Invalid rho schedule {text!r}: {e}") from e

    def __iter__(self):
        return iter(self.values)

    def __len__(self) -> int:
        return len(self.values)


def mask_log_weights(mu: float, sigma: float) -> np.ndarray:
    """Unnormalized Gaussian log-weights at the mu-law decode levels."""
    if not sigma > 0:
        raise ValueError(f"sigma must be > 0, got {sigma}")
    return -((MULAW_LEVELS - mu) ** 2) / (2.0 * sigma * sigma)


def gaussian_mask(mu: float, sigma: float, floor: float = MASK_FLOOR) -> GaussianMask:
    log_w = mask_log_weights(mu, sigma)
    w = np.exp(log_w - log_w.max())
    q = w / w.sum()
    # mixing with a uniform floor keeps every bin >= floor and the sum exactly 1
    probs = floor + (1.0 - MULAW_CHANNELS * floor) * q
    return GaussianMask(probs=probs, mu=float(mu), sigma=float(sigma), floor=floor)


def apply_constraint(p: CategoricalDistribution, m: GaussianMask, rho: float) -> CategoricalDistribution:
    """Fuse the generator distribution with the mask raised to rho."""
    if rho < 0:
        raise ValueError(f"rho must be >= 0, got {rho}")
    if rho == 0:
        return p

    with np.errstate(divide="ignore"):
        log_p = np.log(p.probs)
    log_out = log_p + rho * np.log(m.probs)
    peak = np.max(log_out)
    if not np.isfinite(peak):
        raise ValueError("Constrained distribution has no support")
    out = np.exp(log_out - peak)
    return CategoricalDistribution(out / out.sum())


def sample_from(p: CategoricalDistribution, rng: np.random.Generator, greedy: bool = False) -> MuLawCode:
    """Inverse-CDF draw; greedy mode returns the lowest-index argmax."""
    if greedy:
        return MuLawCode(int(np.argmax(p.probs)))
    cdf = np.cumsum(p.probs)
    u = rng.random() * cdf[-1]
    index = int(np.searchsorted(cdf, u, side="right"))
    return MuLawCode(min(index, MULAW_CHANNELS - 1))
