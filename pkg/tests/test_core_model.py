"""
Unit tests for the demand/allocation types and reward bookkeeping.
"""
import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

# Add parent directory to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from src.allocation.core_model import accrue, initial_reward_state, validate_trace
from src.allocation.feasible_sets import random_feasible
from src.models.allocation import (
    AllocationMatrix,
    DemandMatrix,
    DemandTrace,
    FairnessParams,
    RewardState,
)
from src.models.families import BirkhoffPolytope, JobSimplex, SharedCappedSimplex, make_family
from src.utils.errors import DataError, DimensionError


class TestAccrue:
    """Reward accrual <x_i, y_i> per agent."""

    def setup_method(self):
        self.cache = SharedCappedSimplex(N=2, k=1, m=2)
        self.e1_e2 = DemandMatrix(np.eye(2))

    def test_unit_inner_products(self):
        state = RewardState(np.ones(2))
        alloc = AllocationMatrix(np.eye(2))
        new = accrue(state, self.e1_e2, alloc)
        np.testing.assert_array_equal(new.R, [2.0, 2.0])
        assert new.t == 1

    def test_shared_half_cache(self):
        alloc = AllocationMatrix.from_decision(self.cache, np.array([0.5, 0.5]))
        new = accrue(initial_reward_state(2), self.e1_e2, alloc)
        np.testing.assert_array_equal(new.R, [1.5, 1.5])

    def test_orthogonal_demand_leaves_rewards(self):
        demand = DemandMatrix(np.array([[0.0, 0.0], [1.0, 1.0]]))
        alloc = AllocationMatrix.from_decision(self.cache, np.array([1.0, 0.0]))
        new = accrue(RewardState(np.array([3.0, 1.0])), demand, alloc)
        np.testing.assert_array_equal(new.R, [3.0, 1.0])

    def test_shape_mismatch(self):
        alloc = AllocationMatrix(np.ones((3, 2)) / 3)
        with pytest.raises(DimensionError):
            accrue(initial_reward_state(2), self.e1_e2, alloc)

    def test_agent_count_mismatch(self):
        with pytest.raises(DimensionError):
            accrue(initial_reward_state(3), self.e1_e2, AllocationMatrix(np.eye(2)))

    def test_state_is_not_mutated(self):
        state = initial_reward_state(2)
        accrue(state, self.e1_e2, AllocationMatrix(np.eye(2)))
        np.testing.assert_array_equal(state.R, [1.0, 1.0])
        assert not state.R.flags.writeable

    @given(seed=st.integers(0, 10_000), order=st.permutations(range(6)))
    @settings(max_examples=100, deadline=None)
    def test_order_of_rounds_does_not_matter(self, seed, order):
        rng = np.random.default_rng(seed)
        family = SharedCappedSimplex(N=4, k=2, m=3)
        rounds = []
        for _ in range(6):
            raw = rng.random((4, 3))
            demand = DemandMatrix(raw / raw.sum(axis=0) * rng.uniform(0.1, 1.0, size=3))
            alloc = AllocationMatrix.from_decision(family, random_feasible(family, rng, 1)[0])
            rounds.append((demand, alloc))
        forward = initial_reward_state(3)
        for demand, alloc in rounds:
            forward = accrue(forward, demand, alloc)
        shuffled = initial_reward_state(3)
        for j in order:
            shuffled = accrue(shuffled, *rounds[j])
        np.testing.assert_allclose(shuffled.R, forward.R, rtol=1e-12)
        assert shuffled.t == forward.t == 6


class TestValidateTrace:
    """Demand norm checks against delta and one."""

    def test_one_hot_trace_is_valid(self):
        trace = DemandTrace(N=4, m=2, family="cache", one_hot=np.array([[0, 3], [2, 1]]))
        assert validate_trace(trace, FairnessParams(alpha=0.5, delta=1.0)) == []

    def test_zero_column_below_delta(self):
        X = np.zeros((2, 2, 2))
        X[:, 0, :] = 0.5
        X[1, :, 1] = 0.0
        trace = DemandTrace(N=2, m=2, family="match", dense=X)
        violations = validate_trace(trace, FairnessParams(alpha=0.5, delta=0.1))
        assert len(violations) == 1
        v = violations[0]
        assert (v.round, v.agent, v.kind) == (2, 2, "below_delta")
        assert v.value == 0.0

    def test_column_above_one(self):
        X = np.full((1, 1, 2), 0.5)
        X[0, 0, 0] = 1.3
        trace = DemandTrace(N=1, m=2, family="sched", dense=X)
        violations = validate_trace(trace, FairnessParams(alpha=0.0, delta=0.5))
        assert [(v.round, v.agent, v.kind) for v in violations] == [(1, 1, "above_one")]
        assert violations[0].value == pytest.approx(1.3)

    def test_negative_entry(self):
        X = np.array([[[0.6], [-0.1]]])
        trace = DemandTrace(N=2, m=1, family="cache", dense=X)
        violations = validate_trace(trace, FairnessParams(alpha=0.0, delta=0.1))
        assert [v.kind for v in violations] == ["negative"]

    def test_weight_length_mismatch(self):
        trace = DemandTrace(N=3, m=2, family="cache", one_hot=np.array([[0, 1]]))
        violations = validate_trace(trace, FairnessParams(alpha=0.5, weights=(1.0, 1.0, 1.0)))
        assert [v.kind for v in violations] == ["dimension"]


class TestDemandTypes:
    """Construction checks of demand, allocation and trace records."""

    def test_demand_rejects_large_norm(self):
        with pytest.raises(DataError):
            DemandMatrix(np.array([[0.8], [0.3]]))

    def test_demand_rejects_negative(self):
        with pytest.raises(DataError):
            DemandMatrix(np.array([[-0.1], [0.3]]))

    def test_demand_needs_matrix(self):
        with pytest.raises(DimensionError):
            DemandMatrix(np.ones(3) / 3)

    def test_allocation_membership(self):
        cache = SharedCappedSimplex(N=3, k=1, m=2)
        with pytest.raises(DataError):
            AllocationMatrix(np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]]), cache)
        with pytest.raises(DataError):
            AllocationMatrix.from_decision(cache, np.array([0.6, 0.6, 0.0]))

    def test_trace_storage_is_exclusive(self):
        with pytest.raises(DataError):
            DemandTrace(N=2, m=1, family="cache")
        with pytest.raises(DataError):
            DemandTrace(N=2, m=1, family="cache", one_hot=np.array([[0]]), dense=np.ones((1, 2, 1)) / 2)

    def test_trace_file_ids_in_range(self):
        with pytest.raises(DataError):
            DemandTrace(N=2, m=1, family="cache", one_hot=np.array([[2]]))

    def test_trace_helpers_agree(self):
        ids = np.array([[0, 2], [1, 2], [0, 0]])
        trace = DemandTrace(N=3, m=2, family="cache", one_hot=ids)
        dense = DemandTrace(N=3, m=2, family="cache", dense=trace.to_dense())
        np.testing.assert_array_equal(trace.cumulative_demand(), dense.cumulative_demand())
        np.testing.assert_array_equal(trace.column_norms(), dense.column_norms())
        np.testing.assert_array_equal(trace.round_array(1), dense.round_array(1))
        assert trace == dense
        assert trace.prefix(2).horizon == 2
        assert len(list(trace.rounds)) == 3
        with pytest.raises(DataError):
            trace.prefix(4)

    def test_reward_state_floor(self):
        with pytest.raises(DataError):
            RewardState(np.array([0.5, 2.0]))


class TestFamilies:
    """Family models and parameter validation."""

    def test_uniform_points_are_feasible(self, small_families):
        for family in small_families:
            assert family.contains(family.uniform_point(), 1e-12)

    def test_mu_values(self):
        assert SharedCappedSimplex(N=4, k=2, m=1).mu == 0.5
        assert JobSimplex(m=4).mu == 0.25
        assert BirkhoffPolytope(m=3).mu == pytest.approx(1 / 3)

    def test_make_family_errors(self):
        with pytest.raises(DataError):
            make_family("cache", N=3, k=4, m=1)
        with pytest.raises(DataError):
            make_family("torus", m=2)

    def test_fairness_params_mu_must_fit_family(self):
        params = FairnessParams(alpha=0.5, mu=0.5)
        with pytest.raises(DataError):
            params.validate_for(JobSimplex(m=3))
        FairnessParams(alpha=0.5, mu=1 / 3).validate_for(JobSimplex(m=3))

    def test_fairness_params_ranges(self):
        with pytest.raises(ValueError):
            FairnessParams(alpha=1.0)
        with pytest.raises(ValueError):
            FairnessParams(alpha=0.5, weights=(1.0, -1.0))
        with pytest.raises(DimensionError):
            FairnessParams(alpha=0.5, weights=(1.0, 2.0)).weight_vector(3)
