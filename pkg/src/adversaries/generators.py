"""
Demand-trace generators, including the two lower-bound instances.

All randomness comes from numpy.random.default_rng(seed) (PCG64), so a seed
fixes the trace bit for bit.
"""
import math

import numpy as np

from src.models.allocation import DemandTrace
from src.models.experiment import TraceSpec
from src.storage.trace_store import load_trace
from src.utils.errors import DataError, DimensionError
from src.utils.logger import setup_logger

logger = setup_logger(__name__)


def lower_bound_trace(T: int, eta: float, instance: int, N: int, seed: int = 0) -> DemandTrace:
    """
    One of the two adversarial instances of the approximation lower bound.

    Rounds 1..floor(eta*T): user 1 requests file 1, user 2 requests file 2.
    Afterwards, instance 1 has user 1 on file 2 and user 2 on a uniformly
    random file; instance 2 has user 2 on file 1 and user 1 uniformly random.

    Args:
        T: Horizon
        eta: Length of the first phase as a fraction of T, in [0, 1/2]
        instance: 1 or 2
        N: Library size, at least 3
        seed: Seed of the random tail

    Returns:
        One-hot cache trace with m = 2
    """
    if T < 1:
        raise DataError(f"horizon must be positive, got {T}")
    if not 0.0 <= eta <= 0.5:
        raise DataError(f"eta={eta!r} outside [0, 1/2]")
    if instance not in (1, 2):
        raise DataError(f"instance must be 1 or 2, got {instance!r}")
    if N < 3:
        raise DataError(f"lower-bound instances need N >= 3, got {N}")

    rng = np.random.default_rng(seed)
    split = math.floor(eta * T + 1e-9)
    ids = np.empty((T, 2), dtype=np.int64)
    ids[:split, 0] = 0
    ids[:split, 1] = 1
    tail = T - split
    if instance == 1:
        ids[split:, 0] = 1
        ids[split:, 1] = rng.integers(0, N, size=tail)
    else:
        ids[split:, 0] = rng.integers(0, N, size=tail)
        ids[split:, 1] = 0
    return DemandTrace(N=N, m=2, family="cache", one_hot=ids)


def zipf_probabilities(N: int, s: float) -> np.ndarray:
    """Request probabilities proportional to j^-s for files j = 1..N."""
    if s < 0:
        raise DataError(f"Zipf exponent must be nonnegative, got {s!r}")
    weights = np.arange(1, N + 1, dtype=float) ** (-s)
    return weights / weights.sum()


def zipf_trace(N: int, m: int, s: float, T: int, seed: int = 0) -> DemandTrace:
    """Every user independently requests file j with probability proportional to j^-s."""
    if N < 1 or m < 1 or T < 1:
        raise DataError(f"need N, m, T >= 1, got N={N}, m={m}, T={T}")
    rng = np.random.default_rng(seed)
    ids = rng.choice(N, size=(T, m), p=zipf_probabilities(N, s))
    return DemandTrace(N=N, m=m, family="cache", one_hot=ids)


def uniform_trace(family, T: int, seed: int = 0, delta: float = 1.0) -> DemandTrace:
    """
    I.i.d. demands for any family.

    Cache: uniform one-hot requests. Scheduling: each machine's reward is
    uniform on [delta, 1]. Matching: each agent's demand points in a random
    nonnegative direction with l1-norm uniform on [delta, 1].
    """
    if T < 1:
        raise DataError(f"horizon must be positive, got {T}")
    if not 0.0 < delta <= 1.0:
        raise DataError(f"delta={delta!r} outside (0, 1]")
    if family.kind == "cache":
        return zipf_trace(family.N, family.m, 0.0, T, seed)
    rng = np.random.default_rng(seed)
    if family.kind == "sched":
        X = rng.uniform(delta, 1.0, size=(T, 1, family.m))
        return DemandTrace(N=1, m=family.m, family="sched", dense=X)
    m = family.m
    direction = rng.random((T, m, m)) + 1e-12
    direction /= direction.sum(axis=1, keepdims=True)
    scale = rng.uniform(delta, 1.0, size=(T, 1, m))
    return DemandTrace(N=m, m=m, family="match", dense=direction * scale)


def build_trace(spec: TraceSpec, family) -> DemandTrace:
    """
    Build the trace a TraceSpec describes, for the given family.

    Raises:
        DataError: If the trace kind does not fit the family
        DimensionError: If a loaded trace does not match the family's shape
    """
    if spec.kind == "lower_bound":
        if family.kind != "cache" or family.m != 2 or family.k != 1:
            raise DataError("lower-bound traces need the cache family with m=2, k=1")
        trace = lower_bound_trace(spec.T, spec.eta, spec.instance, family.N, spec.seed)
    elif spec.kind == "zipf_cache":
        if family.kind != "cache":
            raise DataError("Zipf traces need the cache family")
        trace = zipf_trace(family.N, family.m, spec.s, spec.T, spec.seed)
    elif spec.kind == "iid_uniform":
        trace = uniform_trace(family, spec.T, spec.seed, spec.delta)
    else:
        trace = load_trace(spec.path)
        if (trace.N, trace.m) != (family.n_resources, family.n_agents) or trace.family != family.kind:
            raise DimensionError(
                f"trace file is {trace.family} {trace.N} x {trace.m}, expected "
                f"{family.kind} {family.n_resources} x {family.n_agents}"
            )
    logger.debug("trace built", kind=spec.kind, T=trace.horizon, N=trace.N, m=trace.m)
    return trace
