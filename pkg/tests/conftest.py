"""
Shared fixtures for the fairalloc tests.
"""
import sys
from pathlib import Path

import numpy as np
import pytest

# Add parent directory to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from src.models.families import BirkhoffPolytope, JobSimplex, SharedCappedSimplex


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_families():
    """One small instance of every family."""
    return [SharedCappedSimplex(N=5, k=2, m=3), JobSimplex(m=4), BirkhoffPolytope(m=3)]
