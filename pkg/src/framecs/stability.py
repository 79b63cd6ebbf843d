"""Closed-form stability quantities and error bounds for noisy decoding.

The central constant c is the margin of the strengthened null-space
inequality: for kernel vectors v of the composite A @ D there must exist a
kernel-of-D correction u with

    norm(v_Tc, 1) - norm(v_T + u, 1) >= c * norm(D @ v, 2).

On tiny instances (composite nullity at most 2) the infimum defining c is
computed to numerical accuracy by sweeping the kernel circle through the
breakpoints of the piecewise-linear numerator; otherwise seeded sphere
sampling yields an over-estimate, labeled as such, which must never be fed
into bound-validity tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np
from scipy.optimize import minimize_scalar

from . import matcore
from .errors import InvalidInput
from .frames import Frame
from .nspcert import _min_l1_over_kernel

MODE_EXACT_TINY = "exact_tiny"
MODE_SAMPLED = "sampled_upper_estimate"


@dataclass(frozen=True)
class BoundInputs:
    """Everything the closed-form error bounds consume."""

    c: float  # strengthened null-space margin
    nu_a: float  # smallest positive singular value of A
    nu_d: float  # smallest positive singular value of D
    n: int  # number of dictionary columns
    eps: float = 0.0  # measurement noise radius
    delta: float = 0.0  # dictionary perturbation, 1->2 operator norm
    a_spectral: float = 0.0  # spectral norm of A
    x0_l1: float = 0.0  # l1 norm of the planted coefficients
    sigma_s_x0: float = 0.0  # l1 residual of the best s-term approximation

    def __post_init__(self):
        for name in ("c", "nu_a", "nu_d"):
            if getattr(self, name) <= 0:
                raise InvalidInput(f"{name} must be positive")
        for name in ("eps", "delta", "a_spectral", "x0_l1", "sigma_s_x0"):
            if getattr(self, name) < 0:
                raise InvalidInput(f"{name} must be nonnegative")


def best_s_term_residual(x, s: int) -> float:
    """l1 mass of everything but the s largest-magnitude entries."""
    x = matcore.as_vector(x)
    if s < 0 or s > x.size:
        raise InvalidInput("s must be between 0 and len(x)")
    if s == 0:
        return float(np.abs(x).sum())
    mags = np.sort(np.abs(x))[::-1]
    return float(mags[s:].sum())


def operator_norm_1_2(M) -> float:
    """Exact l1-to-l2 operator norm: the largest column l2 norm."""
    M = matcore.as_matrix(M)
    return float(np.linalg.norm(M, axis=0).max())


def _margin_numerator(K, v, T):
    """norm(v_Tc, 1) minus the best kernel-corrected norm(v_T + u, 1)."""
    wT = np.zeros(v.size)
    wT[T] = v[T]
    value, _ = _min_l1_over_kernel(K, wT)
    off = float(np.abs(v).sum() - np.abs(v[T]).sum())
    return off - value


def stability_constant_estimate(
    A,
    D: Frame,
    s: int,
    samples: int = 2000,
    seed: int = 0,
    grid: int = 512,
):
    """Estimate (or compute) the strengthened null-space margin c.

    Returns (c_hat, mode).  With an empty composite kernel, or one contained
    in ker(D), the condition is vacuous and c_hat is +inf.  A negative c_hat
    is a certified violation: some kernel vector has no shrinking correction.

    Exact-tiny mode (composite nullity <= 2 and n <= 12) evaluates the ratio
    on the kernel circle: sign-change breakpoints of the piecewise-linear
    numerator split the circle into arcs, each arc is sampled on a grid and
    every local basin is refined by bounded scalar minimization.  Otherwise
    the kernel sphere is sampled (an over-estimate of the infimum).
    """
    A = matcore.as_matrix(A)
    if s < 1 or s > D.n:
        raise InvalidInput("s must be between 1 and n")
    M = A @ D.matrix
    N = matcore.nullspace_basis(M)
    q = N.shape[1]
    if q == 0:
        return math.inf, MODE_EXACT_TINY
    K = matcore.nullspace_basis(D.matrix, D.tol)
    supports = [list(T) for T in combinations(range(D.n), s)]
    Dmat = D.matrix

    def ratio(v):
        dv = np.linalg.norm(Dmat @ v)
        if dv <= 1e-12 * max(1.0, np.linalg.norm(v)):
            return None
        return min(_margin_numerator(K, v, T) for T in supports) / dv

    if q == 1:
        vals = [r for sign in (1.0, -1.0) if (r := ratio(sign * N[:, 0])) is not None]
        if not vals:
            return math.inf, MODE_EXACT_TINY
        return float(min(vals)), MODE_EXACT_TINY

    if q == 2 and D.n <= 12:
        b1, b2 = N[:, 0], N[:, 1]

        def vec(theta):
            return math.cos(theta) * b1 + math.sin(theta) * b2

        # Breakpoints of the numerator: angles where a coordinate of v flips
        # sign.  Between consecutive breakpoints the off-support term is
        # smooth, so grid + local refinement recovers each basin.
        breaks = set()
        for i in range(D.n):
            if abs(b1[i]) > 1e-14 or abs(b2[i]) > 1e-14:
                t = math.atan2(-b1[i], b2[i])
                breaks.add(t % math.pi)
                breaks.add((t % math.pi) + math.pi)
        knots = np.sort(np.array(sorted(breaks))) if breaks else np.array([0.0])
        best = math.inf

        def h(theta):
            r = ratio(vec(theta))
            return math.inf if r is None else r

        for left, right in zip(knots, np.append(knots[1:], knots[0] + 2 * math.pi)):
            if right - left < 1e-12:
                continue
            thetas = np.linspace(left, right, max(8, grid // len(knots)))
            values = np.array([h(t) for t in thetas])
            best = min(best, float(values.min()))
            interior = np.where(
                (values[1:-1] <= values[:-2]) & (values[1:-1] <= values[2:])
            )[0]
            for i in interior:
                lo, hi = thetas[i], thetas[i + 2]
                res = minimize_scalar(h, bounds=(lo, hi), method="bounded",
                                      options={"xatol": 1e-12})
                best = min(best, float(res.fun))
        if not math.isfinite(best):
            return math.inf, MODE_EXACT_TINY
        return best, MODE_EXACT_TINY

    rng = np.random.default_rng(seed)
    best = math.inf
    for _ in range(samples):
        c = rng.standard_normal(q)
        v = N @ (c / np.linalg.norm(c))
        r = ratio(v)
        if r is not None:
            best = min(best, r)
    return (math.inf if not math.isfinite(best) else float(best)), MODE_SAMPLED


def noisy_recovery_bound(inputs: BoundInputs) -> float:
    """Signal-error bound for noisy decoding under the strengthened margin.

    (2/c) sigma_s(x0) + eps (2 sqrt(n) / (c nu_A nu_D) + 2 / nu_A).
    """
    c = inputs.c
    first = 0.0 if math.isinf(c) else (2.0 / c) * inputs.sigma_s_x0
    amp = (0.0 if math.isinf(c) else 2.0 * math.sqrt(inputs.n) / (c * inputs.nu_a * inputs.nu_d))
    return first + inputs.eps * (amp + 2.0 / inputs.nu_a)


def coefficient_recovery_bound(inputs: BoundInputs, nu_ad: float, statement_form: bool = False) -> float:
    """Coefficient-error bound when the margin holds against norm(v, 2).

    Two conventions for the noise term are in circulation: eps / nu_AD, which
    the kernel-decomposition argument actually yields, and 2 nu_AD eps.  The
    first is the default; the second is computable behind ``statement_form``
    so both can be reported side by side.
    """
    if nu_ad <= 0:
        raise InvalidInput("nu_ad must be positive")
    c = inputs.c
    first = 0.0 if math.isinf(c) else (2.0 / c) * inputs.sigma_s_x0
    if statement_form:
        return first + 2.0 * nu_ad * inputs.eps
    return first + inputs.eps / nu_ad


def perturbed_dictionary_bound(inputs: BoundInputs):
    """(rho, bound) for decoding with a perturbed dictionary.

    rho = 2 delta norm(A, 2) norm(x0, 1) + eps is the enlarged feasibility
    radius; the signal error is bounded by
    2 delta norm(x0, 1) + (2 sqrt(n) / (c nu_A nu_D)) rho + 2 rho / nu_A.
    """
    rho = 2.0 * inputs.delta * inputs.a_spectral * inputs.x0_l1 + inputs.eps
    c = inputs.c
    amp = (0.0 if math.isinf(c) else 2.0 * math.sqrt(inputs.n) / (c * inputs.nu_a * inputs.nu_d))
    bound = 2.0 * inputs.delta * inputs.x0_l1 + amp * rho + 2.0 * rho / inputs.nu_a
    return float(rho), float(bound)


def verbose_bound_report(inputs: BoundInputs, nu_ad: float | None = None, c_mode: str = "") -> str:
    """Flat key=value block with every input and both coefficient-bound forms."""
    lines = [
        f"c={inputs.c:.17g}",
        f"c_mode={c_mode}",
        f"nu_a={inputs.nu_a:.17g}",
        f"nu_d={inputs.nu_d:.17g}",
        f"n={inputs.n}",
        f"eps={inputs.eps:.17g}",
        f"delta={inputs.delta:.17g}",
        f"a_spectral={inputs.a_spectral:.17g}",
        f"x0_l1={inputs.x0_l1:.17g}",
        f"sigma_s_x0={inputs.sigma_s_x0:.17g}",
        f"signal_bound={noisy_recovery_bound(inputs):.17g}",
    ]
    if nu_ad is not None:
        lines.append(f"nu_ad={nu_ad:.17g}")
        lines.append(
            f"coefficient_bound_proof_form={coefficient_recovery_bound(inputs, nu_ad):.17g}"
        )
        lines.append(
            "coefficient_bound_statement_form="
            f"{coefficient_recovery_bound(inputs, nu_ad, statement_form=True):.17g}"
        )
    if inputs.delta > 0:
        rho, bound = perturbed_dictionary_bound(inputs)
        lines.append(f"rho={rho:.17g}")
        lines.append(f"perturbed_bound={bound:.17g}")
    return "\n".join(lines)
