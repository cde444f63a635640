"""
Unit tests for systematic (Madow) sampling and the Birkhoff-von Neumann decomposition.
"""
import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

# Add parent directory to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from src.allocation.feasible_sets import (
    bvn_decompose,
    madow_sample,
    madow_sample_batch,
    permutation_matrix,
    random_feasible,
    sample_integral,
)
from src.models.families import BirkhoffPolytope, JobSimplex, SharedCappedSimplex
from src.utils.errors import DataError
from src.workflows.experiment import sample_audit


def random_doubly_stochastic(rng, m, n_perms=6):
    weights = rng.dirichlet(np.ones(n_perms))
    M = np.zeros((m, m))
    for w in weights:
        M += w * permutation_matrix(rng.permutation(m))
    return M


class TestMadow:
    """Systematic sampling with prescribed inclusion probabilities."""

    def test_deterministic_support(self):
        for u in (0.0, 0.3, 0.999):
            np.testing.assert_array_equal(madow_sample([1.0, 1.0, 0.0], 2, u), [0, 1])

    def test_hand_executed_prefix_sums(self):
        p = [0.5, 0.5, 0.5, 0.5]
        np.testing.assert_array_equal(madow_sample(p, 2, 0.3), [0, 2])
        np.testing.assert_array_equal(madow_sample(p, 2, 0.7), [1, 3])

    def test_invalid_inputs(self):
        with pytest.raises(DataError):
            madow_sample([0.5, 0.5], 2, 0.1)
        with pytest.raises(DataError):
            madow_sample([1.2, -0.2], 1, 0.1)
        with pytest.raises(DataError):
            madow_sample([0.5, 0.5], 1, 1.0)

    def test_exact_cardinality(self, rng):
        p = random_feasible(SharedCappedSimplex(N=12, k=4, m=1), rng, 1)[0]
        idx = madow_sample_batch(p, 4, rng.random(1_000_000))
        assert idx.shape == (1_000_000, 4)
        assert np.all(np.diff(idx, axis=1) > 0)
        assert idx.min() >= 0 and idx.max() < 12

    def test_batch_matches_scalar(self, rng):
        p = random_feasible(SharedCappedSimplex(N=7, k=3, m=1), rng, 1)[0]
        u = rng.random(50)
        batch = madow_sample_batch(p, 3, u)
        for row, draw in zip(batch, u):
            np.testing.assert_array_equal(row, madow_sample(p, 3, draw))

    @given(seed=st.integers(0, 2**32 - 1), k=st.integers(1, 5))
    @settings(max_examples=100, deadline=None)
    def test_vertices_are_sampled_exactly(self, seed, k):
        rng = np.random.default_rng(seed)
        p = np.zeros(8)
        chosen = np.sort(rng.choice(8, size=k, replace=False))
        p[chosen] = 1.0
        np.testing.assert_array_equal(madow_sample(p, k, float(rng.random())), chosen)

    def test_inclusion_frequencies(self):
        rows = sample_audit(SharedCappedSimplex(N=8, k=3, m=1), n_draws=100_000, trials=10, seed=1)
        assert all(r.ok for r in rows)
        assert len(rows) == 10 * 8


class TestBvN:
    """Birkhoff-von Neumann decomposition."""

    def test_identity(self):
        terms = bvn_decompose(np.eye(3))
        assert len(terms) == 1
        assert terms[0][0] == pytest.approx(1.0)
        np.testing.assert_array_equal(terms[0][1], [0, 1, 2])

    def test_two_by_two_half(self):
        terms = bvn_decompose(np.full((2, 2), 0.5))
        assert sorted(c for c, _ in terms) == pytest.approx([0.5, 0.5])
        perms = sorted(tuple(p) for _, p in terms)
        assert perms == [(0, 1), (1, 0)]

    @pytest.mark.parametrize("m", [4, 6])
    def test_random_reconstruction(self, rng, m):
        for _ in range(100):
            M = random_doubly_stochastic(rng, m)
            terms = bvn_decompose(M)
            rebuilt = sum(c * permutation_matrix(p) for c, p in terms)
            assert np.abs(rebuilt - M).max() <= 1e-9
            assert len(terms) <= (m - 1) ** 2 + 1
            assert sum(c for c, _ in terms) == pytest.approx(1.0, abs=1e-9)

    def test_rejects_non_doubly_stochastic(self):
        with pytest.raises(DataError):
            bvn_decompose(np.array([[0.7, 0.3], [0.7, 0.3]]))

    def test_matching_frequencies(self):
        rows = sample_audit(BirkhoffPolytope(m=3), n_draws=100_000, trials=5, seed=2)
        assert all(r.ok for r in rows)


class TestSampleIntegral:
    """Integral draws for every family."""

    def test_vertex_is_returned(self, rng):
        y = np.array([0.0, 1.0, 1.0, 0.0])
        for _ in range(10):
            np.testing.assert_array_equal(sample_integral(SharedCappedSimplex(N=4, k=2, m=1), y, rng), y)

    def test_draws_are_vertices(self, rng, small_families):
        for family in small_families:
            y = random_feasible(family, rng, 1)[0]
            draw = sample_integral(family, y, rng)
            assert set(np.unique(draw)) <= {0.0, 1.0}
            assert family.contains(draw, 1e-12)

    def test_infeasible_point_rejected(self, rng):
        with pytest.raises(DataError):
            sample_integral(JobSimplex(m=2), np.array([0.7, 0.7]), rng)

    def test_scheduling_frequencies(self):
        rows = sample_audit(JobSimplex(m=5), n_draws=100_000, trials=5, seed=4)
        assert all(r.ok for r in rows)
