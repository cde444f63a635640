"""
Geometry of the allocation families: projection, linear maximization,
diameter, membership and randomized integral sampling.
"""
import math
from typing import List, Optional, Tuple

import numpy as np
from scipy.optimize import brentq, linear_sum_assignment
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching

from config.settings import get_settings
from src.utils.errors import DataError, DimensionError
from src.utils.logger import setup_logger

logger = setup_logger(__name__)


def _as_decision(family, v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.shape != family.decision_shape:
        raise DimensionError(f"{family.kind} input must have shape {family.decision_shape}, got {v.shape}")
    if not np.all(np.isfinite(v)):
        raise DataError("projection input contains non-finite values")
    return v


# ---------------------------------------------------------------------------
# Projection
# ---------------------------------------------------------------------------

def project_capped_simplex(v: np.ndarray, k: float, tol: Optional[float] = None) -> np.ndarray:
    """
    Euclidean projection onto {y in [0,1]^N : sum(y) = k}.

    The shift multiplier is found by Brent's method on the clipped sum, then
    recomputed in closed form over the coordinates strictly inside the box.

    Args:
        v: Point to project
        k: Target sum, 0 < k <= N
        tol: Root tolerance on the multiplier

    Returns:
        The projected point
    """
    tol = get_settings().PROJECTION_TOL if tol is None else tol
    v = np.asarray(v, dtype=float)
    n = v.size
    if k >= n:
        return np.ones(n)
    if v.min() >= 0.0 and v.max() <= 1.0 and abs(v.sum() - k) <= tol:
        return v.copy()

    def excess(lam: float) -> float:
        return np.clip(v - lam, 0.0, 1.0).sum() - k

    lam = brentq(excess, v.min() - 1.0, v.max(), xtol=tol, maxiter=500)
    y = np.clip(v - lam, 0.0, 1.0)

    shifted = v - lam
    free = (shifted > 0.0) & (shifted < 1.0)
    if free.any():
        n_upper = int(np.count_nonzero(shifted >= 1.0))
        lam_exact = (v[free].sum() - (k - n_upper)) / free.sum()
        refined = np.clip(v - lam_exact, 0.0, 1.0)
        if abs(refined.sum() - k) <= abs(y.sum() - k):
            y = refined
    return y


def _project_rows_simplex(Y: np.ndarray) -> np.ndarray:
    """Project every row of Y onto the probability simplex (sort-based)."""
    n = Y.shape[1]
    s = -np.sort(-Y, axis=1)
    css = np.cumsum(s, axis=1) - 1.0
    ind = np.arange(1, n + 1)
    rho = np.count_nonzero(s - css / ind > 0, axis=1)
    theta = css[np.arange(Y.shape[0]), rho - 1] / rho
    return np.maximum(Y - theta[:, None], 0.0)


def _kkt_polish(V: np.ndarray, Y: np.ndarray, tol: float) -> Optional[np.ndarray]:
    """
    Exact projection on the support of Y, when the support is the right one.

    Solves Y_ij = V_ij - a_i - b_j on the support with unit margins and checks
    the complementary conditions off the support.
    """
    m = V.shape[0]
    support = Y > get_settings().FEASIBILITY_TOL
    rows, cols = np.nonzero(support)
    # Unknowns (a, b); one equation per row margin and per column margin
    A = np.zeros((2 * m, 2 * m))
    rhs = np.zeros(2 * m)
    for i, j in zip(rows, cols):
        A[i, i] += 1.0
        A[i, m + j] += 1.0
        A[m + j, i] += 1.0
        A[m + j, m + j] += 1.0
        rhs[i] += V[i, j]
        rhs[m + j] += V[i, j]
    rhs -= 1.0
    ab, *_ = np.linalg.lstsq(A, rhs, rcond=None)
    a, b = ab[:m], ab[m:]
    reduced = V - a[:, None] - b[None, :]
    slack = 1e-12 * max(1.0, float(np.abs(V).max()))
    if reduced[support].min() < -slack or (~support).any() and reduced[~support].max() > slack:
        return None
    polished = np.where(support, np.maximum(reduced, 0.0), 0.0)
    if (
        np.abs(polished.sum(axis=0) - 1.0).max() > tol
        or np.abs(polished.sum(axis=1) - 1.0).max() > tol
        or np.abs(polished - Y).max() > 1e-6
    ):
        return None
    return polished


def project_birkhoff(V: np.ndarray, tol: Optional[float] = None, max_sweeps: Optional[int] = None) -> np.ndarray:
    """
    Euclidean projection onto the doubly stochastic matrices.

    Dykstra's alternating projections between the unit-row-sum and the
    unit-column-sum sets, followed by an active-set polish.

    Args:
        V: Square matrix to project
        tol: Stopping tolerance on successive iterates, corrections and row residual
        max_sweeps: Sweep cap

    Returns:
        The projected matrix
    """
    settings = get_settings()
    tol = settings.DYKSTRA_TOL if tol is None else tol
    max_sweeps = settings.DYKSTRA_MAX_SWEEPS if max_sweeps is None else max_sweeps
    min_sweeps = min(settings.DYKSTRA_MIN_SWEEPS, max_sweeps)

    V = np.asarray(V, dtype=float)
    X = V.copy()
    P = np.zeros_like(V)
    Q = np.zeros_like(V)
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        Yr = _project_rows_simplex(X + P)
        P_next = X + P - Yr
        X_next = _project_rows_simplex((Yr + Q).T).T
        Q_next = Yr + Q - X_next
        # X can stall for a sweep while the corrections still move
        change = max(np.abs(X_next - X).max(), np.abs(P_next - P).max(), np.abs(Q_next - Q).max())
        X, P, Q = X_next, P_next, Q_next
        if sweeps >= min_sweeps and change < tol and np.abs(X.sum(axis=1) - 1.0).max() < tol:
            break
    else:
        logger.warning("Birkhoff projection hit the sweep cap", sweeps=max_sweeps,
                       row_residual=float(np.abs(X.sum(axis=1) - 1.0).max()))

    polished = _kkt_polish(V, X, settings.FEASIBILITY_TOL)
    if polished is None:
        logger.debug("KKT polish rejected; keeping Dykstra iterate", sweeps=sweeps)
        return X
    return polished


def project(family, v) -> np.ndarray:
    """
    Euclidean projection of v onto the family.

    Args:
        family: Feasible family
        v: Point of the family's decision shape

    Returns:
        The nearest feasible point

    Raises:
        DimensionError: If v has the wrong shape
        DataError: If v is not finite
    """
    v = _as_decision(family, v)
    if family.kind == "cache":
        return project_capped_simplex(v, family.k)
    if family.kind == "sched":
        return project_capped_simplex(v, 1)
    return project_birkhoff(v)


# ---------------------------------------------------------------------------
# Linear maximization, diameter, membership
# ---------------------------------------------------------------------------

def lmo(family, g) -> np.ndarray:
    """
    Vertex of the family maximizing <g, y>.

    Ties go to the lowest index for the cache and scheduling families.
    """
    g = _as_decision(family, g)
    if family.kind == "cache":
        top = np.argsort(-g, kind="stable")[: family.k]
        y = np.zeros(family.N)
        y[top] = 1.0
        return y
    if family.kind == "sched":
        y = np.zeros(family.m)
        y[int(np.argmax(g))] = 1.0
        return y
    rows, cols = linear_sum_assignment(g, maximize=True)
    Y = np.zeros(family.decision_shape)
    Y[rows, cols] = 1.0
    return Y


def diameter(family) -> float:
    """Upper bound on the Euclidean diameter of the family."""
    if family.kind == "cache":
        return math.sqrt(2 * family.k)
    if family.kind == "sched":
        return math.sqrt(2)
    return math.sqrt(2 * family.m)


def is_feasible(family, decision, tol: Optional[float] = None) -> bool:
    tol = get_settings().FEASIBILITY_TOL if tol is None else tol
    return family.contains(decision, tol)


# ---------------------------------------------------------------------------
# Sampling
# ---------------------------------------------------------------------------

def _inclusion_prefix(p, k: int) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or p.size < k or k < 1:
        raise DataError(f"need a vector of at least k={k} inclusion probabilities")
    tol = get_settings().FEASIBILITY_TOL
    if not np.all(np.isfinite(p)) or p.min() < -tol or p.max() > 1.0 + tol:
        raise DataError("inclusion probabilities must lie in [0, 1]")
    total = p.sum()
    if abs(total - k) > tol:
        raise DataError(f"inclusion probabilities sum to {total!r}, expected {k}")
    p = np.clip(p, 0.0, 1.0) * (k / total)
    cum = np.cumsum(p)
    cum[-1] = float(k)
    return cum


def _distinct_increasing(idx: np.ndarray, k: int) -> np.ndarray:
    # forces strictly increasing indices along the last axis
    offsets = np.arange(k)
    return np.maximum.accumulate(idx - offsets, axis=-1) + offsets


def madow_sample(p, k: int, u: float) -> np.ndarray:
    """
    Systematic sample of k distinct indices with inclusion probabilities p.

    Index j is taken iff cum[j-1] <= u + i < cum[j] for some i in 0..k-1.

    Args:
        p: Inclusion probabilities in [0, 1] summing to k
        k: Sample size
        u: Uniform draw in [0, 1)

    Returns:
        Sorted 0-based indices

    Raises:
        DataError: If p is not a valid inclusion vector or u is outside [0, 1)
    """
    if not 0.0 <= u < 1.0:
        raise DataError(f"uniform draw {u!r} outside [0, 1)")
    cum = _inclusion_prefix(p, k)
    idx = np.searchsorted(cum, u + np.arange(k), side="right")
    return _distinct_increasing(idx, k)


def madow_sample_batch(p, k: int, u) -> np.ndarray:
    """Vectorized madow_sample over an array of uniform draws (n x k result)."""
    u = np.asarray(u, dtype=float)
    if u.ndim != 1 or u.size and (u.min() < 0.0 or u.max() >= 1.0):
        raise DataError("uniform draws must be a vector in [0, 1)")
    cum = _inclusion_prefix(p, k)
    idx = np.searchsorted(cum, u[:, None] + np.arange(k)[None, :], side="right")
    return _distinct_increasing(idx, k)


def bvn_decompose(M, tol: Optional[float] = None) -> List[Tuple[float, np.ndarray]]:
    """
    Birkhoff-von Neumann decomposition by greedy permutation peeling.

    Args:
        M: Doubly stochastic matrix
        tol: Support threshold and margin tolerance

    Returns:
        List of (coefficient, permutation) pairs; the permutation maps row r
        to column perm[r]

    Raises:
        DataError: If M is not doubly stochastic within tol
    """
    tol = get_settings().BVN_TOL if tol is None else tol
    D = np.array(M, dtype=float)
    if D.ndim != 2 or D.shape[0] != D.shape[1]:
        raise DimensionError(f"BvN needs a square matrix, got shape {D.shape}")
    m = D.shape[0]
    if (
        not np.all(np.isfinite(D))
        or D.min() < -tol
        or np.abs(D.sum(axis=0) - 1.0).max() > tol
        or np.abs(D.sum(axis=1) - 1.0).max() > tol
    ):
        raise DataError("matrix is not doubly stochastic")
    D = np.maximum(D, 0.0)

    terms: List[Tuple[float, np.ndarray]] = []
    rows = np.arange(m)
    max_terms = (m - 1) ** 2 + 1
    while D.max() > tol:
        perm = maximum_bipartite_matching(csr_matrix(D > tol), perm_type="column")
        if np.any(perm < 0):
            if D.sum() <= tol * m:
                break
            raise DataError("no perfect matching on the remaining support; matrix is not doubly stochastic")
        entries = D[rows, perm]
        r = int(np.argmin(entries))
        coef = float(entries[r])
        D[rows, perm] -= coef
        D[r, perm[r]] = 0.0
        np.maximum(D, 0.0, out=D)
        terms.append((coef, perm.astype(np.int64)))
        if len(terms) > max_terms:
            raise DataError(f"decomposition exceeded {max_terms} terms")
    return terms


def permutation_matrix(perm: np.ndarray) -> np.ndarray:
    m = perm.size
    P = np.zeros((m, m))
    P[np.arange(m), perm] = 1.0
    return P


def sample_integral(family, y, rng: np.random.Generator) -> np.ndarray:
    """
    Integral allocation with expectation y.

    Madow sampling for the cache and scheduling families; a categorical draw
    over the BvN terms for matching.

    Raises:
        DataError: If y is not feasible
    """
    y = _as_decision(family, y)
    if not is_feasible(family, y):
        raise DataError(f"cannot sample from an infeasible {family.kind} point")
    if family.kind in ("cache", "sched"):
        k = family.k if family.kind == "cache" else 1
        chosen = madow_sample(y, k, float(rng.random()))
        out = np.zeros(family.decision_shape)
        out[chosen] = 1.0
        return out
    terms = bvn_decompose(y)
    cum = np.cumsum([c for c, _ in terms])
    pick = int(np.searchsorted(cum, rng.random() * cum[-1], side="right"))
    return permutation_matrix(terms[min(pick, len(terms) - 1)][1])


# ---------------------------------------------------------------------------
# Enumeration and random points for audits
# ---------------------------------------------------------------------------

def _integer_compositions(n_coords: int, total: int, n: int) -> np.ndarray:
    """All integer vectors in [0, n]^n_coords summing to total."""
    if n_coords == 1:
        return np.array([[total]]) if 0 <= total <= n else np.zeros((0, 1), dtype=np.int64)
    axes = np.meshgrid(*[np.arange(n + 1)] * (n_coords - 1), indexing="ij")
    head = np.stack([a.ravel() for a in axes], axis=1)
    last = total - head.sum(axis=1)
    keep = (last >= 0) & (last <= n)
    return np.column_stack([head[keep], last[keep]])


def grid_points(family, grid_step: float) -> np.ndarray:
    """
    Every feasible decision whose entries are multiples of grid_step.

    Only for tiny families (cache N <= 3, scheduling m <= 3, matching m <= 2).
    Halving the step gives a superset of points.

    Returns:
        Array of shape (P,) + decision_shape

    Raises:
        DataError: If the family is too large or grid_step does not divide 1
    """
    n = int(round(1.0 / grid_step))
    if n < 1 or abs(n * grid_step - 1.0) > 1e-9:
        raise DataError(f"grid_step must divide 1, got {grid_step!r}")
    if family.kind == "cache":
        if family.N > 3:
            raise DataError("cache family too large for grid enumeration")
        return _integer_compositions(family.N, family.k * n, n) / n
    if family.kind == "sched":
        if family.m > 3:
            raise DataError("scheduling family too large for grid enumeration")
        return _integer_compositions(family.m, n, n) / n
    if family.m > 2:
        raise DataError("matching family too large for grid enumeration")
    if family.m == 1:
        return np.ones((1, 1, 1))
    t = np.arange(n + 1) / n
    return np.stack([np.stack([t, 1 - t], axis=1), np.stack([1 - t, t], axis=1)], axis=1)


def random_feasible(family, rng: np.random.Generator, n: int, n_vertices: int = 3) -> np.ndarray:
    """n random feasible decisions, each a Dirichlet mixture of random vertices."""
    weights = rng.dirichlet(np.ones(n_vertices), size=n)
    out = np.zeros((n,) + family.decision_shape)
    for v in range(n_vertices):
        if family.kind == "cache":
            vertex = np.zeros((n, family.N))
            chosen = np.argsort(rng.random((n, family.N)), axis=1)[:, : family.k]
            np.put_along_axis(vertex, chosen, 1.0, axis=1)
        elif family.kind == "sched":
            vertex = np.eye(family.m)[rng.integers(0, family.m, size=n)]
        else:
            perms = np.argsort(rng.random((n, family.m)), axis=1)
            vertex = np.zeros((n, family.m, family.m))
            np.put_along_axis(vertex, perms[:, :, None], 1.0, axis=2)
        out += weights[:, v].reshape((n,) + (1,) * len(family.decision_shape)) * vertex
    return out
