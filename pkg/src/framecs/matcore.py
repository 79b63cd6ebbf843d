"""Dense linear-algebra kernel shared by every other module.

All routines operate on 2-D float64 arrays and use a single numerical-rank
convention: a singular value counts as zero when it is at most
``tol * sigma_max * max(rows, cols)``.  This makes rank, nullspace dimension
and the smallest positive singular value mutually consistent.

The module also owns the project-wide plain-text matrix format: one row per
line, comma-separated decimal literals, no header; writers emit 17
significant digits so that round trips are exact in double precision.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput, NoPositiveSingularValue

DEFAULT_TOL = 1e-12


def as_matrix(a, name="matrix") -> np.ndarray:
    """Validate and return ``a`` as a 2-D finite float64 array."""
    m = np.asarray(a, dtype=float)
    if m.ndim != 2:
        raise InvalidInput(f"{name} must be 2-D, got shape {m.shape}")
    if m.shape[0] < 1 or m.shape[1] < 1:
        raise InvalidInput(f"{name} must have at least one row and column, got {m.shape}")
    if not np.all(np.isfinite(m)):
        raise InvalidInput(f"{name} contains non-finite entries")
    return m


def as_vector(a, length=None, name="vector") -> np.ndarray:
    """Validate and return ``a`` as a 1-D finite float64 array."""
    v = np.asarray(a, dtype=float).reshape(-1)
    if not np.all(np.isfinite(v)):
        raise InvalidInput(f"{name} contains non-finite entries")
    if length is not None and v.size != length:
        raise InvalidInput(f"{name} must have length {length}, got {v.size}")
    return v


@dataclass(frozen=True)
class SvdResult:
    """Thin SVD ``M = U @ diag(S) @ V.T`` with orthonormal columns in U, V."""

    left_vectors: np.ndarray
    singular_values: np.ndarray
    right_vectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.left_vectors * self.singular_values) @ self.right_vectors.T


def svd(M) -> SvdResult:
    M = as_matrix(M)
    U, s, Vt = np.linalg.svd(M, full_matrices=False)
    return SvdResult(left_vectors=U, singular_values=s, right_vectors=Vt.T)


def _zero_threshold(s: np.ndarray, shape, tol: float) -> float:
    if s.size == 0:
        return 0.0
    return tol * s[0] * max(shape)


def rank(M, tol: float = DEFAULT_TOL) -> int:
    """Numerical rank: number of singular values above the zero threshold."""
    if tol <= 0:
        raise InvalidInput("tol must be positive")
    M = as_matrix(M)
    s = np.linalg.svd(M, compute_uv=False)
    return int(np.sum(s > _zero_threshold(s, M.shape, tol)))


def smallest_positive_singular(M, tol: float = DEFAULT_TOL) -> float:
    """Smallest singular value counted as nonzero under the rank convention."""
    M = as_matrix(M)
    s = np.linalg.svd(M, compute_uv=False)
    positive = s[s > _zero_threshold(s, M.shape, tol)]
    if positive.size == 0:
        raise NoPositiveSingularValue("matrix is numerically zero")
    return float(positive[-1])


def nullspace_basis(M, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Orthonormal basis of ker(M), returned as a cols-by-nullity array."""
    if tol <= 0:
        raise InvalidInput("tol must be positive")
    M = as_matrix(M)
    _, s, Vt = np.linalg.svd(M, full_matrices=True)
    r = int(np.sum(s > _zero_threshold(s, M.shape, tol)))
    return Vt[r:].T.copy()


def decompose_along_kernel(M, h, tol: float = DEFAULT_TOL):
    """Split ``h = a + b`` with ``a`` in ker(M) and ``b`` orthogonal to ker(M).

    The orthogonal part satisfies ``norm(b) <= norm(M @ h) / nu_M`` where
    ``nu_M`` is the smallest positive singular value of M.
    """
    M = as_matrix(M)
    h = as_vector(h, length=M.shape[1], name="h")
    N = nullspace_basis(M, tol)
    a = N @ (N.T @ h) if N.shape[1] > 0 else np.zeros_like(h)
    return a, h - a


def least_squares(M, y) -> np.ndarray:
    """Minimum-norm x minimizing ``norm(M @ x - y)``."""
    M = as_matrix(M)
    y = as_vector(y, length=M.shape[0], name="y")
    x, *_ = np.linalg.lstsq(M, y, rcond=None)
    return x


def write_matrix(path, M) -> None:
    """Write M in the shared text format (17 significant digits per entry)."""
    M = as_matrix(M)
    lines = [",".join(format(v, ".17g") for v in row) for row in M]
    try:
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as exc:
        raise InvalidInput(f"cannot write matrix to {path}: {exc}") from exc


def read_matrix(path) -> np.ndarray:
    """Parse the shared text format; dimensions are inferred from the file."""
    rows = []
    width = None
    try:
        fh = open(path)
    except OSError as exc:
        raise InvalidInput(f"cannot read matrix from {path}: {exc}") from exc
    with fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                row = [float(tok) for tok in line.split(",")]
            except ValueError as exc:
                raise InvalidInput(f"{path}:{lineno}: unparseable entry ({exc})") from exc
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise InvalidInput(
                    f"{path}:{lineno}: expected {width} entries per row, got {len(row)}"
                )
            rows.append(row)
    if not rows:
        raise InvalidInput(f"{path}: empty matrix file")
    m = np.array(rows, dtype=float)
    if not np.all(np.isfinite(m)):
        raise InvalidInput(f"{path}: non-finite entries")
    return m


def write_vector(path, v) -> None:
    """Vectors are stored as one-column matrices."""
    write_matrix(path, as_vector(v).reshape(-1, 1))


def read_vector(path) -> np.ndarray:
    m = read_matrix(path)
    if m.shape[1] != 1:
        raise InvalidInput(f"{path}: expected a one-column vector file, got {m.shape}")
    return m[:, 0]
