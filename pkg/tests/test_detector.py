"""Tests for the collapse detector."""

import json

import numpy as np
import pytest

from src.detector import (
    CollapseDetector,
    DetectionReport,
    SegmentVerdict,
    detect,
    frame_powers,
    max_pow_statistic,
    segment_statistics,
)
from src.envelope import EnvelopeParams
from src.generators import CollapseKind, CollapsePlan, faulty_generate
from src.signal_core import SegmentSpec, Waveform


@pytest.fixture
def type1_candidate(harmonic_reference):
    plan = CollapsePlan(CollapseKind.TYPE_I, SegmentSpec(4500, 1500), amplitude_factor=3.0)
    return faulty_generate(harmonic_reference, plan, seed=0)


class TestDetect:
    """Test segment-wise detection."""

    def test_identical_pair_not_flagged(self, harmonic_reference):
        """Test a reference against itself has zero excess everywhere."""
        report = detect(harmonic_reference, harmonic_reference)
        assert not report.utterance_flagged
        assert all(v.statistic == 0.0 for v in report.verdicts)

    def test_type1_flagged_in_its_segment(self, harmonic_reference, type1_candidate):
        """Test only the segment holding the burst is flagged."""
        report = detect(type1_candidate, harmonic_reference, seg_len=4000, threshold=0.1)
        assert [v.flagged for v in report.verdicts] == [False, True]
        assert report.utterance_flagged
        assert report.flagged_segments[0].segment == SegmentSpec(4000, 4000)

    def test_short_final_segment(self, harmonic_reference):
        """Test a partial final segment is scored."""
        report = detect(harmonic_reference, harmonic_reference, seg_len=3000)
        assert [v.segment.length for v in report.verdicts] == [3000, 3000, 2000]

    def test_infinite_threshold(self, harmonic_reference, type1_candidate):
        """Test nothing is flagged at an infinite threshold."""
        report = detect(type1_candidate, harmonic_reference, threshold=float("inf"))
        assert not report.utterance_flagged

    def test_flagging_monotone_in_threshold(self, harmonic_reference, type1_candidate):
        """Test raising the threshold never flags more segments."""
        counts = [
            len(detect(type1_candidate, harmonic_reference, seg_len=2000, threshold=t).flagged_segments)
            for t in (0.0, 0.05, 0.1, 0.3, 1.0)
        ]
        assert counts == sorted(counts, reverse=True)

    def test_type2_dilution(self, harmonic_reference):
        """Test a few isolated impulses still lift the segment envelope."""
        x = harmonic_reference.samples.copy()
        for pos in (5000, 5400, 5800):
            x[pos:pos + 3] = 0.8
        report = detect(Waveform(x), harmonic_reference, threshold=0.1)
        assert [v.flagged for v in report.verdicts] == [False, True]

    def test_rectifier_variant(self, harmonic_reference, type1_candidate):
        """Test the rectifier envelope also flags a type I burst."""
        report = detect(type1_candidate, harmonic_reference, params=EnvelopeParams(use_hilbert=False))
        assert report.verdicts[1].flagged

    def test_length_mismatch(self, harmonic_reference):
        """Test candidates of a different length raise."""
        short = Waveform(harmonic_reference.samples[:7000])
        with pytest.raises(ValueError, match="Length mismatch"):
            detect(short, harmonic_reference)

    def test_rate_mismatch(self, harmonic_reference):
        """Test candidates at a different sample rate raise."""
        other = Waveform(harmonic_reference.samples, 16000)
        with pytest.raises(ValueError, match="Sample rate"):
            detect(other, harmonic_reference)

    def test_segment_statistics_pairs(self, harmonic_reference, type1_candidate):
        """Test statistics come back paired with their spans."""
        stats = segment_statistics(type1_candidate, harmonic_reference, 4000, EnvelopeParams())
        assert [span.start for span, _ in stats] == [0, 4000]
        assert stats[1][1] > stats[0][1]


class TestSegmentVerdict:
    """Test verdict consistency."""

    def test_inconsistent_flag(self):
        """Test flagged must equal statistic > threshold."""
        with pytest.raises(ValueError, match="inconsistent"):
            SegmentVerdict(SegmentSpec(0, 10), statistic=0.05, flagged=True, threshold=0.1)

    def test_boundary_not_flagged(self):
        """Test a statistic equal to the threshold is not flagged."""
        v = SegmentVerdict(SegmentSpec(0, 10), statistic=0.1, flagged=False, threshold=0.1)
        assert not v.flagged

    def test_to_dict(self):
        """Test the serialized verdict layout."""
        v = SegmentVerdict(SegmentSpec(4000, 4000), statistic=0.3, flagged=True, threshold=0.1, rho_used=0.1)
        assert v.to_dict() == {
            "start": 4000, "length": 4000, "statistic": 0.3, "flagged": True,
            "rho_used": 0.1, "final_statistic": None, "residual": False, "attempts": 1,
        }


class TestDetectionReport:
    """Test report aggregation."""

    def test_empty(self):
        """Test an empty report is not flagged."""
        report = DetectionReport(verdicts=[], threshold=0.1)
        assert not report.utterance_flagged
        assert report.max_statistic == float("-inf")

    def test_to_dict_is_json(self, harmonic_reference, type1_candidate):
        """Test the report serializes to JSON, infinity included."""
        report = detect(type1_candidate, harmonic_reference, threshold=float("inf"))
        data = json.loads(json.dumps(report.to_dict()))
        assert data["schema"] == 1
        assert data["threshold"] == "inf"
        assert len(data["segments"]) == 2


class TestMaxPow:
    """Test the frame-power baseline."""

    def test_identical_is_zero(self, harmonic_reference):
        """Test identical signals give zero."""
        assert max_pow_statistic(harmonic_reference, harmonic_reference) == 0.0

    def test_doubled_amplitude(self, harmonic_reference):
        """Test doubling the amplitude gives three times the reference peak frame power."""
        doubled = Waveform(harmonic_reference.samples * 2)
        expected = 3 * frame_powers(harmonic_reference.samples).max()
        assert max_pow_statistic(doubled, harmonic_reference) == pytest.approx(expected)

    def test_frame_count(self):
        """Test framing matches the LPC frame convention."""
        assert frame_powers(np.zeros(5000)).size == (5000 - 512) // 128 + 1

    def test_short_signal_single_frame(self):
        """Test a signal shorter than a frame is one frame."""
        np.testing.assert_allclose(frame_powers(np.full(100, 0.5)), [0.25])

    def test_type2_weaker_than_envelope(self, harmonic_reference):
        """Test sparse impulses barely move the frame power."""
        x = harmonic_reference.samples.copy()
        for pos in (5000, 5400, 5800):
            x[pos:pos + 3] = 0.8
        assert max_pow_statistic(Waveform(x), harmonic_reference) < 0.05


class TestCollapseDetector:
    """Test the detector facade."""

    def test_detect(self, harmonic_reference, type1_candidate):
        """Test the facade applies its settings."""
        detector = CollapseDetector(seg_len=2000, threshold=0.1)
        report = detector.detect(type1_candidate, harmonic_reference)
        assert len(report.verdicts) == 4
        assert report.utterance_flagged

    def test_invalid_seg_len(self):
        """Test a nonpositive segment length raises."""
        with pytest.raises(ValueError):
            CollapseDetector(seg_len=0)

    def test_format_summary(self, harmonic_reference, type1_candidate):
        """Test the summary lists segments and the utterance verdict."""
        detector = CollapseDetector()
        summary = detector.format_summary(detector.detect(type1_candidate, harmonic_reference))
        assert "Detection Summary" in summary
        assert "Hilbert" in summary
        assert "YES" in summary
        assert "Utterance flagged: YES" in summary
