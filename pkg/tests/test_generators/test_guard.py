"""Tests for guarded generation."""

import logging

import numpy as np
import pytest

from src.constraint import RhoSchedule
from src.envelope import EnvelopeParams
from src.generators import (
    CollapseInjector,
    CollapseKind,
    CollapsePlan,
    ReferenceTrackingGenerator,
    ToyCellGenerator,
    generate_unguarded,
    generate_with_guard,
)
from src.lpc import LpcConfig, analyze_reference
from src.signal_core import SegmentSpec, Waveform
from src.verification import synth_reference


@pytest.fixture
def analysis(harmonic_reference):
    return analyze_reference(harmonic_reference, LpcConfig())


def injected(ref: Waveform, kind: CollapseKind = CollapseKind.TYPE_I, start: int = 4200) -> CollapseInjector:
    plan = CollapsePlan(kind, SegmentSpec(start, 1500), amplitude_factor=3.0, impulse_count=5)
    return CollapseInjector(ReferenceTrackingGenerator(ref), plan, peak=ref.peak, seed=1)


class TestGenerateUnguarded:
    """Test plain segmented generation."""

    def test_length_and_rate(self):
        """Test the output length and sample rate."""
        gen = ToyCellGenerator.from_seed(0)
        out = generate_unguarded(5000, 4000, gen, gen.initial_state(0), 16000)
        assert len(out) == 5000
        assert out.sample_rate_hz == 16000

    def test_segmenting_is_transparent(self):
        """Test segment boundaries do not change the samples."""
        gen = ToyCellGenerator.from_seed(0)
        a = generate_unguarded(3000, 1000, gen, gen.initial_state(2), 22050)
        b = generate_unguarded(3000, 3000, gen, gen.initial_state(2), 22050)
        np.testing.assert_array_equal(a.samples, b.samples)


class TestGenerateWithGuard:
    """Test detect-rewind-regenerate."""

    def test_infinite_threshold_equals_unguarded(self, harmonic_reference, analysis):
        """Test an infinite threshold never regenerates and matches plain generation."""
        gen = ToyCellGenerator.from_seed(3)
        plain = generate_unguarded(8000, 4000, gen, gen.initial_state(5), 22050)

        guarded, report = generate_with_guard(
            8000, 4000, harmonic_reference, analysis, EnvelopeParams(), float("inf"),
            RhoSchedule(), gen, seed=5,
        )

        np.testing.assert_array_equal(guarded.samples, plain.samples)
        assert not report.utterance_flagged
        assert all(v.attempts == 1 and v.rho_used is None for v in report.verdicts)

    def test_clean_generation_not_regenerated(self, harmonic_reference, analysis):
        """Test a well-behaved generator passes every segment on the first attempt."""
        gen = ReferenceTrackingGenerator(harmonic_reference)
        _, report = generate_with_guard(
            8000, 4000, harmonic_reference, analysis, EnvelopeParams(), 0.1, RhoSchedule(), gen,
        )
        assert [v.flagged for v in report.verdicts] == [False, False]
        assert all(v.attempts == 1 for v in report.verdicts)

    def test_type1_collapse_suppressed(self, harmonic_reference, analysis):
        """Test an injected type I collapse is flagged then regenerated below threshold."""
        gen = injected(harmonic_reference)
        out, report = generate_with_guard(
            8000, 4000, harmonic_reference, analysis, EnvelopeParams(), 0.1, RhoSchedule(), gen,
        )

        first, second = report.verdicts
        assert not first.flagged
        assert second.flagged
        assert second.rho_used in RhoSchedule().values
        assert not second.residual
        assert second.final_statistic <= 0.1
        assert second.attempts >= 2
        # the accepted samples keep the reference scale
        assert np.max(np.abs(out.samples[4200:5700])) <= 2 * harmonic_reference.peak

    def test_segment_before_collapse_unchanged(self, harmonic_reference, analysis):
        """Test regeneration never touches samples of earlier segments."""
        gen = injected(harmonic_reference)
        plain = generate_unguarded(8000, 4000, gen, gen.initial_state(0), 22050)
        guarded, _ = generate_with_guard(
            8000, 4000, harmonic_reference, analysis, EnvelopeParams(), 0.1, RhoSchedule(), gen, seed=0,
        )
        np.testing.assert_array_equal(guarded.samples[:4000], plain.samples[:4000])

    def test_exhausted_schedule_marks_residual(self, harmonic_reference, analysis, caplog):
        """Test a collapse surviving the whole schedule is kept and marked residual."""
        gen = injected(harmonic_reference)
        with caplog.at_level(logging.WARNING):
            _, report = generate_with_guard(
                8000, 4000, harmonic_reference, analysis, EnvelopeParams(), 0.1,
                RhoSchedule((1e-6,)), gen,
            )

        second = report.verdicts[1]
        assert second.flagged
        assert second.residual
        assert second.rho_used == 1e-6
        assert second.attempts == 2
        assert "still collapsed" in caplog.text

    def test_report_statistic_is_first_pass(self, harmonic_reference, analysis):
        """Test the verdict statistic is the unconstrained excess."""
        gen = injected(harmonic_reference)
        _, report = generate_with_guard(
            8000, 4000, harmonic_reference, analysis, EnvelopeParams(), 0.1, RhoSchedule(), gen,
        )
        second = report.verdicts[1]
        assert second.statistic > second.final_statistic

    def test_type2_collapse_suppressed(self, harmonic_reference, analysis):
        """Test injected impulses are flagged then regenerated below threshold."""
        gen = injected(harmonic_reference, CollapseKind.TYPE_II)
        out, report = generate_with_guard(
            8000, 4000, harmonic_reference, analysis, EnvelopeParams(), 0.1, RhoSchedule(), gen,
        )

        second = report.verdicts[1]
        assert second.flagged
        assert not second.residual
        assert second.final_statistic <= 0.1
        assert np.max(np.abs(out.samples[4200:5700])) <= 2 * harmonic_reference.peak

    def test_suppression_rate_over_references(self):
        """Test at least 95% of 50 injected segments, both kinds, end below threshold."""
        passed = {CollapseKind.TYPE_I: 0, CollapseKind.TYPE_II: 0}
        total = dict.fromkeys(passed, 0)
        for i in range(50):
            kind = CollapseKind.TYPE_I if i % 2 == 0 else CollapseKind.TYPE_II
            full = synth_reference(np.random.default_rng([21, i]))
            ref = Waveform(full.samples[:8000], full.sample_rate_hz)
            analysis = analyze_reference(ref, LpcConfig())
            _, report = generate_with_guard(
                8000, 4000, ref, analysis, EnvelopeParams(), 0.1, RhoSchedule(), injected(ref, kind),
                seed=i,
            )
            second = report.verdicts[1]
            assert second.flagged
            total[kind] += 1
            passed[kind] += not second.residual

        assert sum(passed.values()) / sum(total.values()) >= 0.95
        for kind in passed:
            assert passed[kind] / total[kind] >= 0.9

    def test_reference_too_short(self, harmonic_reference, analysis):
        """Test total_len beyond the reference raises."""
        gen = ToyCellGenerator.from_seed(0)
        with pytest.raises(ValueError, match="Reference"):
            generate_with_guard(9000, 4000, harmonic_reference, analysis, EnvelopeParams(), 0.1,
                                RhoSchedule(), gen)

    def test_nonpositive_length(self, harmonic_reference, analysis):
        """Test total_len 0 raises."""
        gen = ToyCellGenerator.from_seed(0)
        with pytest.raises(ValueError):
            generate_with_guard(0, 4000, harmonic_reference, analysis, EnvelopeParams(), 0.1,
                                RhoSchedule(), gen)
