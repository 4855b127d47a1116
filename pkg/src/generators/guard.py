"""
Guarded generation: detect, rewind and regenerate.

Every time a segment has been generated its envelope is compared with the
reference envelope of the same span. A flagged segment is regenerated from
the checkpoint taken at its start with the next control factor of the
schedule. When the schedule is used up the last attempt is kept and marked
residual.
"""

import logging
from typing import Optional

import numpy as np

from ..constraint import MASK_FLOOR, SIGMA_FLOOR, RhoSchedule
from ..detector import DetectionReport, SegmentVerdict
from ..envelope import EnvelopeParams, envelope_excess, extract_envelope
from ..lpc import LpcAnalysis
from ..signal_core import Waveform, segments_for_length
from .base import BaseGenerator, Checkpoint, GeneratorState, MaskSource

logger = logging.getLogger(__name__)


def generate_unguarded(total_len: int, seg_len: int, gen: BaseGenerator,
                       state: GeneratorState, sample_rate_hz: int) -> Waveform:
    """Plain segment-by-segment generation with no detection."""
    samples = np.empty(total_len)
    for span in segments_for_length(total_len, seg_len):
        samples[span.start:span.end], state = gen.generate_segment(state, span.length)
    return Waveform(samples, sample_rate_hz)


def generate_with_guard(total_len: int, seg_len: int, ref: Waveform, analysis: LpcAnalysis,
                        params: EnvelopeParams, threshold: float, schedule: RhoSchedule,
                        gen: BaseGenerator, seed: int = 0, state: Optional[GeneratorState] = None,
                        mask_floor: float = MASK_FLOOR,
                        sigma_floor: float = SIGMA_FLOOR) -> tuple[Waveform, DetectionReport]:
    """
    Generate `total_len` samples, regenerating collapsed segments.

    Args:
        total_len: number of samples to generate.
        seg_len: detection segment length.
        ref: reference waveform (at least total_len samples).
        analysis: LPC analysis of the reference covering total_len.
        params: envelope detector settings.
        threshold: envelope excess above which a segment is collapsed.
        schedule: control factors tried in order on regeneration.
        gen: the generator.
        seed: RNG seed used when no starting state is given.
        state: optional starting state.

    Returns:
        (generated waveform, report with one verdict per segment)
    """
    if total_len <= 0:
        raise ValueError(f"total_len must be > 0, got {total_len}")
    if len(ref) < total_len:
        raise ValueError(f"Reference has {len(ref)} samples, need {total_len}")
    if analysis.num_samples < total_len:
        raise ValueError(f"LPC analysis covers {analysis.num_samples} samples, need {total_len}")
    params.check_rate(ref.sample_rate_hz)

    if state is None:
        state = gen.initial_state(seed)
    buffer = np.zeros(total_len)
    verdicts: list[SegmentVerdict] = []

    for span in segments_for_length(total_len, seg_len):
        checkpoint = Checkpoint.capture(state)
        ref_env = extract_envelope(ref, span, params)

        def attempt(rho: Optional[float]) -> tuple[float, GeneratorState]:
            mask = None if rho is None else MaskSource(analysis, rho, mask_floor, sigma_floor)
            samples, next_state = gen.generate_segment(checkpoint.restore(), span.length, mask)
            buffer[span.start:span.end] = samples
            # look-back context comes from what has been generated so far
            generated = Waveform(buffer[:span.end], ref.sample_rate_hz)
            return envelope_excess(extract_envelope(generated, span, params), ref_env), next_state

        first, state = attempt(None)
        statistic, rho_used, attempts = first, None, 1
        if first > threshold:
            logger.info(f"Segment [{span.start}, {span.end}) collapsed (excess={first:.4f}), regenerating")
            for rho in schedule:
                statistic, state = attempt(rho)
                rho_used, attempts = rho, attempts + 1
                logger.debug(f"  rho={rho:g}: excess={statistic:.4f}")
                if statistic <= threshold:
                    break

        residual = statistic > threshold
        if residual:
            logger.warning(
                f"Segment [{span.start}, {span.end}) still collapsed after rho={rho_used:g}; accepting"
            )
        verdicts.append(SegmentVerdict(
            segment=span,
            statistic=first,
            flagged=first > threshold,
            threshold=threshold,
            rho_used=rho_used,
            final_statistic=statistic,
            residual=residual,
            attempts=attempts,
        ))

    return Waveform(buffer, ref.sample_rate_hz), DetectionReport(verdicts=verdicts, threshold=threshold)
