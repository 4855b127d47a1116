"""
Collapse detector for wavguard.

Core logic for:
- Segment-wise envelope comparison of a candidate against its reference
- The max-frame-power baseline statistic
- Human-readable summaries of a DetectionReport
"""

import logging
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .envelope import EnvelopeParams, envelope_excess, extract_envelope
from .signal_core import SegmentSpec, Waveform, segments_of

logger = logging.getLogger(__name__)

DEFAULT_SEG_LEN = 4000
REPORT_SCHEMA = 1


@dataclass
class SegmentVerdict:
    """Detection outcome for one segment."""
    segment: SegmentSpec
    statistic: float
    flagged: bool
    threshold: float
    rho_used: Optional[float] = None  # set by guarded generation only
    final_statistic: Optional[float] = None
    residual: bool = False
    attempts: int = 1

    def __post_init__(self):
        if self.flagged != (self.statistic > self.threshold):
            raise ValueError(
                f"Verdict inconsistent: statistic {self.statistic} vs threshold {self.threshold}, "
                f"flagged={self.flagged}"
            )

    def to_dict(self) -> dict:
        data = asdict(self)
        data.pop("segment")
        data.pop("threshold")
        return {"start": self.segment.start, "length": self.segment.length, **data}


@dataclass
class DetectionReport:
    verdicts: list[SegmentVerdict]
    threshold: float
    utterance_flagged: bool = field(init=False)

    def __post_init__(self):
        self.utterance_flagged = any(v.flagged for v in self.verdicts)

    @property
    def flagged_segments(self) -> list[SegmentVerdict]:
        return [v for v in self.verdicts if v.flagged]

    @property
    def max_statistic(self) -> float:
        return max((v.statistic for v in self.verdicts), default=float("-inf"))

    def to_dict(self) -> dict:
        return {
            "schema": REPORT_SCHEMA,
            "threshold": _json_float(self.threshold),
            "utterance_flagged": self.utterance_flagged,
            "segments": [v.to_dict() for v in self.verdicts],
        }


def _json_float(x: float):
    # JSON has no infinity literal
    return x if np.isfinite(x) else str(x)


def _check_pair(candidate: Waveform, reference: Waveform):
    if len(candidate) != len(reference):
        raise ValueError(f"Length mismatch: candidate {len(candidate)} vs reference {len(reference)}")
    if candidate.sample_rate_hz != reference.sample_rate_hz:
        raise ValueError(
            f"Sample rate mismatch: candidate {candidate.sample_rate_hz} vs "
            f"reference {reference.sample_rate_hz}"
        )


def segment_statistics(candidate: Waveform, reference: Waveform, seg_len: int,
                       params: EnvelopeParams) -> list[tuple[SegmentSpec, float]]:
    """Envelope excess of the candidate over the reference for every segment."""
    _check_pair(candidate, reference)
    params.check_rate(candidate.sample_rate_hz)
    stats = []
    for span in segments_of(candidate, seg_len):
        cand_env = extract_envelope(candidate, span, params)
        ref_env = extract_envelope(reference, span, params)
        stats.append((span, envelope_excess(cand_env, ref_env)))
    return stats


def detect(candidate: Waveform, reference: Waveform, seg_len: int = DEFAULT_SEG_LEN,
           params: Optional[EnvelopeParams] = None, threshold: float = 0.1) -> DetectionReport:
    params = params or EnvelopeParams()
    verdicts = [
        SegmentVerdict(segment=span, statistic=stat, flagged=stat > threshold, threshold=threshold)
        for span, stat in segment_statistics(candidate, reference, seg_len, params)
    ]
    for v in verdicts:
        logger.debug(f"Segment [{v.segment.start}, {v.segment.end}): excess={v.statistic:.4f}")
    return DetectionReport(verdicts=verdicts, threshold=threshold)


def frame_powers(x: np.ndarray, frame_len: int = 512, frame_shift: int = 128) -> np.ndarray:
    """Mean-squared amplitude per frame; a signal shorter than one frame is a single frame."""
    x = np.asarray(x, dtype=np.float64)
    if x.size == 0:
        raise ValueError("Cannot frame an empty signal")
    if x.size < frame_len:
        return np.array([np.mean(x ** 2)])
    frames = sliding_window_view(x, frame_len)[::frame_shift]
    return np.mean(frames ** 2, axis=1)


def max_pow_statistic(candidate: Waveform, reference: Waveform,
                      frame_len: int = 512, frame_shift: int = 128) -> float:
    """Difference between the largest frame powers of candidate and reference."""
    if len(candidate) != len(reference):
        raise ValueError(f"Length mismatch: candidate {len(candidate)} vs reference {len(reference)}")
    cand = frame_powers(candidate.samples, frame_len, frame_shift)
    ref = frame_powers(reference.samples, frame_len, frame_shift)
    return float(cand.max() - ref.max())


class CollapseDetector:
    """Segment-wise collapse detector with fixed settings."""

    def __init__(self, params: Optional[EnvelopeParams] = None,
                 seg_len: int = DEFAULT_SEG_LEN, threshold: float = 0.1):
        if seg_len <= 0:
            raise ValueError(f"seg_len must be > 0, got {seg_len}")
        self.params = params or EnvelopeParams()
        self.seg_len = seg_len
        self.threshold = threshold

    def detect(self, candidate: Waveform, reference: Waveform) -> DetectionReport:
        report = detect(candidate, reference, self.seg_len, self.params, self.threshold)
        if report.utterance_flagged:
            logger.info(f"{len(report.flagged_segments)}/{len(report.verdicts)} segments flagged")
        return report

    def format_summary(self, report: DetectionReport) -> str:
        """Format a human-readable summary."""
        method = "Hilbert" if self.params.use_hilbert else "rectifier"
        lines = [
            "=" * 60,
            f"wavguard Detection Summary - {method} envelope, threshold {report.threshold:g}",
            "=" * 60,
            "",
            f"  {'Start':>8} {'Length':>7} {'Excess':>9} {'Flag':<5} {'Rho':>6}",
            "-" * 60,
        ]

        for v in report.verdicts:
            flag = "YES" if v.flagged else ""
            rho = "" if v.rho_used is None else f"{v.rho_used:g}"
            line = f"  {v.segment.start:>8} {v.segment.length:>7} {v.statistic:>9.4f} {flag:<5} {rho:>6}"
            if v.residual:
                line += "  RESIDUAL"
            lines.append(line)

        lines.extend([
            "",
            f"  Utterance flagged: {'YES' if report.utterance_flagged else 'no'}",
            "=" * 60,
        ])
        return "\n".join(lines)
