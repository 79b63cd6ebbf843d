"""Decoders for dictionary-based compressed sensing.

Equality-constrained l1 problems are solved as exact linear programs (split
x = p - q) with a dual certificate extracted from the LP solution.  Noisy
problems use operator splitting: an ADMM scheme with a soft-thresholding
proximal step for coefficient-space problems, and a primal-dual scheme for
the analysis formulation.  Every optimal report carries a verified duality
certificate; non-unique minimizers are expected and only the synthesized
signal (or the objective value) is contractually meaningful.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
from scipy.optimize import linprog

from . import matcore
from .errors import (
    CombinatorialBudgetExceeded,
    DegenerateSignal,
    InconsistentRepresentation,
    InvalidInput,
    NoSolution,
)
from .frames import DEFAULT_SUBSET_BUDGET, Frame, canonical_dual

OPTIMAL = "optimal"
MAX_ITERATIONS = "max_iterations"
INFEASIBLE = "infeasible"


@dataclass(frozen=True)
class SolverOptions:
    feas_tol: float = 1e-9
    opt_tol: float = 1e-8
    max_iter: int = 100_000
    rho: float = 1.0  # splitting penalty; adapted by residual balancing


DEFAULT_OPTIONS = SolverOptions()


@dataclass(frozen=True)
class SolverReport:
    """Solve outcome.  feasibility_residual is the constraint violation
    (distance beyond the allowed radius, so 0 for strictly feasible points);
    an optimal status guarantees violation <= feas_tol and a certified gap."""

    minimizer: np.ndarray
    objective: float
    feasibility_residual: float
    optimality_gap: float
    iterations: int
    status: str
    dual_certificate: np.ndarray | None = field(default=None, repr=False)


@dataclass(frozen=True)
class SynthesisResult:
    """Coefficient report plus the synthesized signal z = D @ x."""

    coefficients: SolverReport
    signal: np.ndarray


def _report(minimizer, M, y, gap, iterations, status, certificate=None, eps=0.0):
    minimizer = np.asarray(minimizer, dtype=float)
    violation = max(float(np.linalg.norm(M @ minimizer - y)) - eps, 0.0)
    return SolverReport(
        minimizer=minimizer,
        objective=float(np.abs(minimizer).sum()),
        feasibility_residual=violation,
        optimality_gap=float(max(gap, 0.0)),
        iterations=iterations,
        status=status,
        dual_certificate=certificate,
    )


def basis_pursuit(M, y, opts: SolverOptions = DEFAULT_OPTIONS) -> SolverReport:
    """min norm(x, 1) subject to M @ x = y, solved as an exact LP.

    The returned dual certificate lam satisfies norm(M.T @ lam, inf) <= 1 and
    y @ lam >= objective - optimality_gap (LP duality), so optimality is
    verifiable without trusting the solver.
    """
    M = matcore.as_matrix(M)
    y = matcore.as_vector(y, length=M.shape[0], name="y")
    n = M.shape[1]
    cost = np.ones(2 * n)
    res = linprog(
        cost,
        A_eq=np.hstack([M, -M]),
        b_eq=y,
        bounds=(0, None),
        method="highs",
        options={"presolve": True},
    )
    if res.status == 2:
        x = matcore.least_squares(M, y)
        return _report(x, M, y, np.inf, 0, INFEASIBLE)
    if res.status == 1:
        x = res.x[:n] - res.x[n:] if res.x is not None else np.zeros(n)
        return _report(x, M, y, np.inf, int(res.nit), MAX_ITERATIONS)
    if res.status != 0:
        raise InvalidInput(f"LP solver failed: {res.message}")
    x = res.x[:n] - res.x[n:]
    lam = np.asarray(res.eqlin.marginals, dtype=float)
    # Rescale so the certificate is exactly dual feasible before measuring the gap.
    scale = max(np.abs(M.T @ lam).max(), 1.0) if lam.size else 1.0
    lam = lam / scale
    gap = np.abs(x).sum() - y @ lam
    feas = float(np.linalg.norm(M @ x - y))
    status = OPTIMAL if feas <= opts.feas_tol and gap <= opts.opt_tol else MAX_ITERATIONS
    return _report(x, M, y, gap, int(res.nit), status, certificate=lam)


class _BallProjector:
    """Projection onto {x : norm(M @ x - y) <= eps} via the SVD of M."""

    def __init__(self, M, y, tol=matcore.DEFAULT_TOL):
        self.M = M
        self.y = y
        U, s, Vt = np.linalg.svd(M, full_matrices=False)
        keep = s > matcore._zero_threshold(s, M.shape, tol)
        self.U = U[:, keep]
        self.s = s[keep]
        self.Vt = Vt[keep]
        self.yhat = self.U.T @ y
        # Residual component of y outside range(M): unavoidable for any x.
        self.min_residual = math.sqrt(max(np.dot(y, y) - np.dot(self.yhat, self.yhat), 0.0))

        self._warm_lam = 1.0

    def __call__(self, w, eps):
        r = self.M @ w - self.y
        if np.linalg.norm(r) <= eps:
            return w
        what = self.Vt @ w
        # Rotated residual along range directions; constant part is min_residual.
        rho2 = (self.s * what - self.yhat) ** 2
        target = eps * eps - self.min_residual**2
        if target <= 0:
            # eps at (or below) the geometric floor: return the best-fit point.
            coef = self.yhat / self.s
            return w + self.Vt.T @ (coef - what)

        s2 = self.s**2

        def resid2(lam):
            return float(np.sum(rho2 / (1.0 + lam * s2) ** 2)) + self.min_residual**2

        # Secular equation 1/sqrt(resid2) = 1/eps, solved by the standard
        # monotone Newton iteration with a bisection safeguard.
        lo, hi = 0.0, max(self._warm_lam, 1.0)
        while resid2(hi) > eps * eps and hi < 1e18:
            lo, hi = hi, hi * 8.0
        lam = min(max(self._warm_lam, lo), hi)
        for _ in range(100):
            r2 = resid2(lam)
            rr = math.sqrt(r2)
            if abs(rr - eps) <= 1e-13 * eps:
                break
            if r2 > eps * eps:
                lo = lam
            else:
                hi = lam
            drdl = -float(np.sum(rho2 * s2 / (1.0 + lam * s2) ** 3)) / rr
            lam_new = lam + (1.0 / rr - 1.0 / eps) * (rr * rr / drdl)
            if not (lo < lam_new < hi):
                lam_new = 0.5 * (lo + hi)
            lam = lam_new
        self._warm_lam = lam
        coef = (what + lam * self.s * self.yhat) / (1.0 + lam * s2)
        return w + self.Vt.T @ (coef - what)


def _soft(v, t):
    return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)


def _bpdn_dual_gap(M, y, x, eps):
    """Duality gap from the residual-direction dual candidate (weak duality)."""
    obj = np.abs(x).sum()
    if obj == 0.0:
        return 0.0, None
    r = y - M @ x
    denom = np.abs(M.T @ r).max()
    if denom <= 0:
        return np.inf, None
    lam = r / denom
    dual = y @ lam - eps * np.linalg.norm(lam)
    return obj - dual, lam


def bpdn(M, y, eps: float, opts: SolverOptions = DEFAULT_OPTIONS) -> SolverReport:
    """min norm(x, 1) subject to norm(M @ x - y) <= eps.

    eps = 0 delegates to the exact LP; eps > 0 runs ADMM whose x-update is an
    exact projection onto the constraint ball, so iterates stay feasible.  The
    stopping rule combines primal/dual residuals with a verified duality gap.
    """
    if eps < 0:
        raise InvalidInput("eps must be nonnegative")
    if eps == 0.0:
        return basis_pursuit(M, y, opts)
    M = matcore.as_matrix(M)
    y = matcore.as_vector(y, length=M.shape[0], name="y")
    n = M.shape[1]
    if np.linalg.norm(y) <= eps:
        return _report(np.zeros(n), M, y, 0.0, 0, OPTIMAL, eps=eps)
    project = _BallProjector(M, y)
    if project.min_residual > eps + opts.feas_tol:
        return _report(matcore.least_squares(M, y), M, y, np.inf, 0, INFEASIBLE, eps=eps)

    rho = opts.rho
    x = project(np.zeros(n), eps)
    z = x.copy()
    u = np.zeros(n)
    best = None
    for it in range(1, opts.max_iter + 1):
        x = project(z - u, eps)
        z_old = z
        z = _soft(x + u, 1.0 / rho)
        u += x - z
        r_norm = np.linalg.norm(x - z)
        s_norm = rho * np.linalg.norm(z - z_old)
        if it % 25 == 0 or (r_norm <= opts.feas_tol and s_norm <= opts.feas_tol):
            gap, lam = _bpdn_dual_gap(M, y, x, eps)
            obj = np.abs(x).sum()
            if best is None or gap < best[0]:
                best = (gap, x.copy(), lam, it)
            if gap <= opts.opt_tol * (1.0 + obj):
                return _report(x, M, y, gap, it, OPTIMAL, certificate=lam, eps=eps)
        # Residual balancing keeps the two ADMM residuals comparable.
        if it % 50 == 0:
            if r_norm > 10.0 * s_norm:
                rho *= 2.0
                u /= 2.0
            elif s_norm > 10.0 * r_norm:
                rho /= 2.0
                u *= 2.0
    gap, x_best, lam, _ = best if best is not None else (np.inf, x, None, opts.max_iter)
    return _report(x_best, M, y, gap, opts.max_iter, MAX_ITERATIONS, certificate=lam, eps=eps)


def l1_synthesis(A, D: Frame, y, eps: float = 0.0, opts: SolverOptions = DEFAULT_OPTIONS) -> SynthesisResult:
    """Sparse-coefficient decoding followed by synthesis: z = D @ x.

    The coefficient minimizer may be non-unique for coherent dictionaries;
    only the synthesized signal is meaningful when recovery conditions hold.
    """
    A = matcore.as_matrix(A)
    if A.shape[1] != D.d:
        raise InvalidInput(f"A has {A.shape[1]} columns but the frame lives in R^{D.d}")
    report = bpdn(A @ D.matrix, y, eps, opts)
    return SynthesisResult(coefficients=report, signal=D.matrix @ report.minimizer)


def _analysis_lp(A, D, y, opts):
    d, n = D.matrix.shape
    m = A.shape[0]
    # Variables (z, t): min sum(t) s.t. +-D^T z <= t, A z = y.
    cost = np.concatenate([np.zeros(d), np.ones(n)])
    Dt = D.matrix.T
    A_ub = np.block([[Dt, -np.eye(n)], [-Dt, -np.eye(n)]])
    b_ub = np.zeros(2 * n)
    A_eq = np.hstack([A, np.zeros((m, n))])
    res = linprog(
        cost,
        A_ub=A_ub,
        b_ub=b_ub,
        A_eq=A_eq,
        b_eq=y,
        bounds=[(None, None)] * d + [(0, None)] * n,
        method="highs",
    )
    if res.status == 2:
        z = matcore.least_squares(A, y)
        return SolverReport(z, float(np.abs(Dt @ z).sum()),
                            float(np.linalg.norm(A @ z - y)), np.inf, 0, INFEASIBLE)
    if res.status != 0:
        raise InvalidInput(f"LP solver failed: {res.message}")
    z = res.x[:d]
    obj = float(np.abs(Dt @ z).sum())
    nu = np.asarray(res.eqlin.marginals, dtype=float)
    gap = max(obj - float(y @ nu), 0.0)
    feas = float(np.linalg.norm(A @ z - y))
    status = OPTIMAL if feas <= opts.feas_tol and gap <= opts.opt_tol * (1 + obj) else MAX_ITERATIONS
    return SolverReport(z, obj, feas, gap, int(res.nit), status, dual_certificate=nu)


def _analysis_dual_value(A, D, y, eps, p, range_proj, tol=1e-10):
    """Valid lower bound on the analysis optimum from a dual iterate p.

    p is corrected so that D @ p lies exactly in range(A.T) (required for the
    dual function to be finite), then rescaled into the unit sup-norm ball.
    """
    w = D.matrix @ p
    w_range = range_proj @ w
    correction = matcore.least_squares(D.matrix, w_range - w)
    p_corr = p + correction
    scale = max(np.abs(p_corr).max(), 1.0)
    p_corr /= scale
    xi = -(D.matrix @ p_corr)
    mu = matcore.least_squares(A.T, xi)
    if np.linalg.norm(A.T @ mu - xi) > tol * (1.0 + np.linalg.norm(xi)):
        return -np.inf
    return float(-(mu @ y) - eps * np.linalg.norm(mu))


def l1_analysis(A, D: Frame, y, eps: float = 0.0, opts: SolverOptions = DEFAULT_OPTIONS) -> SolverReport:
    """min norm(D.T @ z, 1) subject to norm(A @ z - y) <= eps.

    The noiseless case is an exact LP.  The noisy case runs a primal-dual
    splitting scheme whose primal iterates are kept feasible by exact ball
    projection; it stops when a constructed dual point certifies the gap.
    """
    if eps < 0:
        raise InvalidInput("eps must be nonnegative")
    A = matcore.as_matrix(A)
    y = matcore.as_vector(y, length=A.shape[0], name="y")
    if A.shape[1] != D.d:
        raise InvalidInput(f"A has {A.shape[1]} columns but the frame lives in R^{D.d}")
    if eps == 0.0:
        return _analysis_lp(A, D, y, opts)

    project = _BallProjector(A, y)
    if project.min_residual > eps + opts.feas_tol:
        z = matcore.least_squares(A, y)
        violation = max(float(np.linalg.norm(A @ z - y)) - eps, 0.0)
        return SolverReport(z, float(np.abs(D.matrix.T @ z).sum()),
                            violation, np.inf, 0, INFEASIBLE)
    # Orthogonal projector onto range(A.T) for the dual-value construction.
    range_proj = project.Vt.T @ project.Vt

    Dt = D.matrix.T
    L = np.linalg.norm(D.matrix, 2)
    tau = sigma = 0.99 / L
    z = project(np.zeros(D.d), eps)
    z_bar = z.copy()
    p = np.zeros(D.n)
    best = None
    for it in range(1, opts.max_iter + 1):
        p = np.clip(p + sigma * (Dt @ z_bar), -1.0, 1.0)
        z_new = project(z - tau * (D.matrix @ p), eps)
        z_bar = 2.0 * z_new - z
        z = z_new
        if it % 50 == 0 or it == opts.max_iter:
            obj = float(np.abs(Dt @ z).sum())
            dual = _analysis_dual_value(A, D, y, eps, p, range_proj)
            gap = obj - dual
            if best is None or gap < best[0]:
                best = (gap, z.copy(), it)
            if gap <= opts.opt_tol * (1.0 + obj):
                violation = max(float(np.linalg.norm(A @ z - y)) - eps, 0.0)
                return SolverReport(z, obj, violation, max(gap, 0.0), it, OPTIMAL)
    gap, z_best, _ = best
    obj = float(np.abs(Dt @ z_best).sum())
    violation = max(float(np.linalg.norm(A @ z_best - y)) - eps, 0.0)
    return SolverReport(z_best, obj, violation, max(gap, 0.0), opts.max_iter, MAX_ITERATIONS)


def l0_oracle(
    A,
    D: Frame,
    y,
    s_max: int,
    budget: int = DEFAULT_SUBSET_BUDGET,
    fit_tol: float | None = None,
):
    """Exhaustive minimal-support decoder: least squares on every support.

    Returns (x, sparsity) for the first support (smallest cardinality,
    lexicographic order) whose least-squares fit reaches the measurement
    within fit_tol; raises NoSolution when no support of size <= s_max fits.
    """
    A = matcore.as_matrix(A)
    y = matcore.as_vector(y, length=A.shape[0], name="y")
    M = A @ D.matrix
    n = D.n
    if s_max < 0 or s_max > n:
        raise InvalidInput("s_max must be between 0 and n")
    total = sum(math.comb(n, k) for k in range(1, s_max + 1))
    if total > budget:
        raise CombinatorialBudgetExceeded(
            f"support enumeration needs {total} candidates, budget is {budget}"
        )
    if fit_tol is None:
        fit_tol = 1e-8 * (1.0 + np.linalg.norm(y))
    if np.linalg.norm(y) <= fit_tol:
        return np.zeros(n), 0
    for k in range(1, s_max + 1):
        for T in combinations(range(n), k):
            cols = M[:, T]
            xT, *_ = np.linalg.lstsq(cols, y, rcond=None)
            if np.linalg.norm(cols @ xT - y) <= fit_tol:
                x = np.zeros(n)
                x[list(T)] = xT
                return x, k
    raise NoSolution(f"no support of size <= {s_max} fits the measurements")


def sparse_dual(D: Frame, z0, x0, tol: float = 1e-9) -> np.ndarray:
    """A dual frame whose analysis coefficients of z0 are exactly x0.

    Built as the canonical dual plus a rank-one correction:
    Dtilde = (D D^T)^{-1} D + z0 (x0 - xc)^T / norm(z0)^2 with xc the
    canonical-dual coefficients of z0.  Both defining identities
    (D @ Dtilde.T = I and Dtilde.T @ z0 = x0) follow by direct algebra.
    """
    z0 = matcore.as_vector(z0, length=D.d, name="z0")
    x0 = matcore.as_vector(x0, length=D.n, name="x0")
    z_norm = np.linalg.norm(z0)
    if z_norm == 0.0:
        raise DegenerateSignal("z0 must be nonzero")
    if np.linalg.norm(D.matrix @ x0 - z0) > tol * (1.0 + z_norm):
        raise InconsistentRepresentation("D @ x0 does not synthesize z0")
    F = canonical_dual(D)
    xc = F.T @ z0
    return F + np.outer(z0, x0 - xc) / (z_norm**2)
