"""Dictionaries (frames) and their measurements.

A frame here is a d-by-n real matrix, n >= d, whose columns span R^d.
Signals are synthesized as z = D @ x.  The module provides the standard
frame-theoretic measurements (coherence, frame bounds, spark, duals) and the
seeded constructors used by the simulation protocol.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np
import scipy.linalg

from . import matcore
from .errors import CombinatorialBudgetExceeded, DegenerateColumn, InvalidInput

#: Returned by spark() for injective matrices: no dependent column subset exists.
SPARK_INFINITE = math.inf

DEFAULT_SUBSET_BUDGET = 10**7

GENERATOR_ID = "numpy-pcg64"


@dataclass(frozen=True)
class Frame:
    """A d-by-n matrix with full row rank d, plus the numerical tolerance."""

    matrix: np.ndarray
    tol: float = matcore.DEFAULT_TOL

    def __post_init__(self):
        m = matcore.as_matrix(self.matrix, name="frame matrix")
        object.__setattr__(self, "matrix", m)
        d, n = m.shape
        if n < d:
            raise InvalidInput(f"frame must have n >= d columns, got {d}x{n}")
        if matcore.rank(m, self.tol) != d:
            raise InvalidInput("frame columns must span R^d (full row rank)")

    @property
    def d(self) -> int:
        return self.matrix.shape[0]

    @property
    def n(self) -> int:
        return self.matrix.shape[1]


@dataclass(frozen=True)
class FrameStats:
    coherence: float
    frame_bound_lower: float
    frame_bound_upper: float
    spark: float
    full_spark: bool
    nu: float


def normalized_columns(M) -> np.ndarray:
    """Columns scaled to unit l2 norm; a zero column raises DegenerateColumn."""
    M = matcore.as_matrix(M)
    norms = np.linalg.norm(M, axis=0)
    if np.any(norms <= matcore.DEFAULT_TOL * max(M.shape) * max(norms.max(), 1.0)):
        raise DegenerateColumn("matrix has a (numerically) zero column")
    return M / norms


def coherence(D: Frame) -> float:
    """Largest |<di, dj>| over distinct column-normalized pairs."""
    Dn = normalized_columns(D.matrix)
    G = np.abs(Dn.T @ Dn)
    np.fill_diagonal(G, 0.0)
    return float(min(G.max(), 1.0))


def frame_bounds(D: Frame):
    """(A, B) with A = sigma_min(D)^2 and B = sigma_max(D)^2."""
    s = np.linalg.svd(D.matrix, compute_uv=False)
    return float(s[D.d - 1] ** 2), float(s[0] ** 2)


def spark(D: Frame, cap: int | None = None, budget: int = DEFAULT_SUBSET_BUDGET):
    """Smallest number of linearly dependent columns, searched up to ``cap``.

    Returns SPARK_INFINITE for injective matrices (no dependent subset exists)
    and None when no dependent subset of size <= cap was found.  For n > d the
    spark is at most d + 1, so the default cap d + 1 is always decisive.
    """
    d, n = D.d, D.n
    if cap is None:
        cap = d + 1
    if cap > d + 1:
        raise InvalidInput("cap must be at most d + 1")
    if matcore.nullspace_basis(D.matrix, D.tol).shape[1] == 0:
        return SPARK_INFINITE
    total = sum(math.comb(n, k) for k in range(1, cap + 1))
    if total > budget:
        raise CombinatorialBudgetExceeded(
            f"spark search needs {total} subsets, budget is {budget}"
        )
    for k in range(1, cap + 1):
        for T in combinations(range(n), k):
            if matcore.rank(D.matrix[:, T], D.tol) < k:
                return k
    # Only reachable when the caller lowered the cap below d + 1.
    return None


def is_full_spark(
    D: Frame,
    budget: int = DEFAULT_SUBSET_BUDGET,
    prescreen: int = 16,
) -> bool:
    """True iff every d-column submatrix has rank d (exhaustive check).

    A handful of random d-subsets are tested first so that grossly deficient
    frames are rejected before the exhaustive pass.
    """
    d, n = D.d, D.n
    total = math.comb(n, d)
    if total > budget:
        raise CombinatorialBudgetExceeded(
            f"full-spark check needs {total} subsets, budget is {budget}"
        )
    rng = np.random.default_rng(0)
    for _ in range(min(prescreen, total)):
        T = rng.choice(n, size=d, replace=False)
        if matcore.rank(D.matrix[:, T], D.tol) < d:
            return False
    for T in combinations(range(n), d):
        if matcore.rank(D.matrix[:, T], D.tol) < d:
            return False
    return True


def canonical_dual(D: Frame) -> np.ndarray:
    """The dual frame (D D^T)^{-1} D; satisfies F @ D.T = I."""
    M = D.matrix
    gram = M @ M.T
    return scipy.linalg.solve(gram, M, assume_a="pos")


def frame_stats(D: Frame, budget: int = DEFAULT_SUBSET_BUDGET) -> FrameStats:
    lo, hi = frame_bounds(D)
    return FrameStats(
        coherence=coherence(D),
        frame_bound_lower=lo,
        frame_bound_upper=hi,
        spark=spark(D, budget=budget),
        full_spark=is_full_spark(D, budget=budget),
        nu=matcore.smallest_positive_singular(D.matrix, D.tol),
    )


def build_dct(d: int) -> np.ndarray:
    """Orthonormal DCT-II matrix: row k is c_k * cos(pi k (2j+1) / (2d))."""
    if d < 1:
        raise InvalidInput("d must be at least 1")
    k = np.arange(d).reshape(-1, 1)
    j = np.arange(d).reshape(1, -1)
    F = np.cos(np.pi * k * (2 * j + 1) / (2 * d))
    scale = np.full(d, math.sqrt(2.0 / d))
    scale[0] = math.sqrt(1.0 / d)
    return scale.reshape(-1, 1) * F


def build_coherent_frame(d: int, perturbation: float, seed: int) -> Frame:
    """The d-by-2d simulation frame: DCT basis plus unit-norm 3-atom mixtures.

    Each extra column mixes 3 distinct DCT columns with standard-normal
    weights, plus ``perturbation`` times a standard-normal vector, and is then
    normalized.  With perturbation 0 the frame is highly coherent with spark
    at most 4; any positive perturbation makes it full spark almost surely.
    """
    if d < 4:
        raise InvalidInput("d must be at least 4")
    if perturbation < 0:
        raise InvalidInput("perturbation must be nonnegative")
    rng = np.random.default_rng(seed)
    F = build_dct(d)
    G = np.empty((d, d))
    for col in range(d):
        idx = rng.choice(d, size=3, replace=False)
        weights = rng.standard_normal(3)
        g = rng.standard_normal(d)
        v = F[:, idx] @ weights + perturbation * g
        G[:, col] = v / np.linalg.norm(v)
    return Frame(np.hstack([F, G]))


def build_spiked_identity(d: int, eps: float) -> Frame:
    """Identity plus one extra column w = (1+eps, eps, ..., eps).

    The extra column is strongly correlated with e1 for small eps, yet the
    frame is full spark; its kernel is spanned by (w, -1).
    """
    if d < 2:
        raise InvalidInput("d must be at least 2")
    if eps <= 0:
        raise InvalidInput("eps must be positive")
    w = np.full(d, eps)
    w[0] = 1.0 + eps
    return Frame(np.hstack([np.eye(d), w.reshape(-1, 1)]))


def gaussian_matrix(m: int, d: int, seed: int) -> np.ndarray:
    """i.i.d. N(0, 1/m) sensing matrix; deterministic for a given seed."""
    if m < 1 or d < 1:
        raise InvalidInput("m and d must be at least 1")
    rng = np.random.default_rng(seed)
    return rng.standard_normal((m, d)) / math.sqrt(m)
