"""Sample generators for wavguard."""

from .base import BaseGenerator, Checkpoint, GeneratorState, MaskSource
from .faulty import CollapseInjector, CollapseKind, CollapsePlan, faulty_generate
from .guard import generate_unguarded, generate_with_guard
from .toy_cell import ToyCellGenerator, ToyCellWeights, toy_distribution
from .tracking import ReferenceTrackingGenerator

__all__ = [
    "BaseGenerator",
    "Checkpoint",
    "CollapseInjector",
    "CollapseKind",
    "CollapsePlan",
    "GeneratorState",
    "MaskSource",
    "ReferenceTrackingGenerator",
    "ToyCellGenerator",
    "ToyCellWeights",
    "faulty_generate",
    "generate_unguarded",
    "generate_with_guard",
    "toy_distribution",
]
