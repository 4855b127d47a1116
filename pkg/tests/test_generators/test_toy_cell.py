"""Tests for the fixed-weight toy cell."""

import numpy as np
import pytest

from src.generators import GeneratorState, ToyCellGenerator, ToyCellWeights, toy_distribution


def state_for(history: np.ndarray, conditioning: np.ndarray, position: int = 0) -> GeneratorState:
    return GeneratorState(history=history, conditioning=conditioning,
                          rng=np.random.default_rng(0), position=position)


class TestToyCellWeights:
    """Test weight construction."""

    def test_from_seed_reproducible(self):
        """Test the same seed gives the same weights."""
        a = ToyCellWeights.from_seed(3)
        b = ToyCellWeights.from_seed(3)
        np.testing.assert_array_equal(a.output, b.output)
        np.testing.assert_array_equal(a.filter_input, b.filter_input)

    def test_different_seeds_differ(self):
        """Test different seeds give different weights."""
        assert not np.array_equal(ToyCellWeights.from_seed(3).output, ToyCellWeights.from_seed(4).output)

    def test_dimensions(self):
        """Test the receptive field and conditioning size are read off the shapes."""
        w = ToyCellWeights.from_seed(0, receptive_field=16, conditioning_dim=4, hidden_dim=8)
        assert w.receptive_field == 16
        assert w.conditioning_dim == 4
        assert w.output.shape == (8, 256)

    def test_shape_mismatch(self):
        """Test inconsistent shapes raise."""
        w = ToyCellWeights.zeros(receptive_field=4, conditioning_dim=2, hidden_dim=3)
        with pytest.raises(ValueError, match="gate_input"):
            ToyCellWeights(w.filter_input, np.zeros((5, 3)), w.filter_cond, w.gate_cond, w.output)

    def test_non_finite(self):
        """Test NaN weights raise."""
        w = ToyCellWeights.zeros(receptive_field=4, conditioning_dim=2, hidden_dim=3)
        bad = w.output.copy()
        bad[0, 0] = np.nan
        with pytest.raises(ValueError, match="non-finite"):
            ToyCellWeights(w.filter_input, w.gate_input, w.filter_cond, w.gate_cond, bad)


class TestToyDistribution:
    """Test the gated-cell distribution."""

    def test_zero_weights_uniform(self):
        """Test all-zero weights give the uniform distribution."""
        w = ToyCellWeights.zeros()
        p = toy_distribution(w, state_for(np.full(64, 0.3), np.ones(8)))
        np.testing.assert_allclose(p.probs, np.full(256, 1 / 256))

    def test_normalized(self):
        """Test the output is a valid distribution for random histories."""
        w = ToyCellWeights.from_seed(1)
        rng = np.random.default_rng(2)
        for _ in range(20):
            p = toy_distribution(w, state_for(rng.uniform(-1, 1, 64), rng.standard_normal(8)))
            assert p.probs.sum() == pytest.approx(1.0)
            assert p.probs.min() > 0

    def test_position_invariant(self):
        """Test the distribution depends on history and conditioning only."""
        w = ToyCellWeights.from_seed(1)
        h = np.random.default_rng(3).uniform(-0.5, 0.5, 64)
        c = np.zeros(8)
        a = toy_distribution(w, state_for(h.copy(), c, position=0))
        b = toy_distribution(w, state_for(h.copy(), c, position=5000))
        np.testing.assert_array_equal(a.probs, b.probs)

    def test_history_matters(self):
        """Test a different history changes the distribution."""
        w = ToyCellWeights.from_seed(1)
        a = toy_distribution(w, state_for(np.zeros(64), np.zeros(8)))
        b = toy_distribution(w, state_for(np.full(64, 0.5), np.zeros(8)))
        assert not np.allclose(a.probs, b.probs)

    def test_wrong_history_length(self):
        """Test a history that does not match the weights raises."""
        with pytest.raises(ValueError, match="history"):
            toy_distribution(ToyCellWeights.from_seed(1), state_for(np.zeros(32), np.zeros(8)))


class TestToyCellGenerator:
    """Test the generator wrapper."""

    def test_name(self):
        """Test the generator name."""
        assert ToyCellGenerator.from_seed(0).name == "toy"

    def test_from_seed_conditioning(self):
        """Test conditioning is drawn reproducibly from the seed."""
        a = ToyCellGenerator.from_seed(9)
        b = ToyCellGenerator.from_seed(9)
        np.testing.assert_array_equal(a.conditioning, b.conditioning)
        assert a.conditioning.shape == (8,)

    def test_greedy_is_deterministic_across_seeds(self):
        """Test greedy decoding ignores the RNG."""
        gen = ToyCellGenerator(ToyCellWeights.from_seed(2), greedy=True)
        a, _ = gen.generate_segment(gen.initial_state(0), 100)
        b, _ = gen.generate_segment(gen.initial_state(1), 100)
        np.testing.assert_array_equal(a, b)
