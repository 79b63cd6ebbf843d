"""Acceptance suite: one test per criterion, each printing a PASS line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see per-criterion
lines.  Instance families are seeded and deterministic; collection helpers
filter seeds by certified properties, never by observed outcomes.
"""

import time
from itertools import combinations

import numpy as np
import pytest

from framecs import experiments, frames, matcore, nspcert, solvers, stability
from framecs.frames import Frame
from framecs.nspcert import CERTIFIED, REFUTED, UNDETERMINED
from framecs.stability import MODE_EXACT_TINY, BoundInputs

from test_stability import sweep_margin_ratio


def report(num, name, detail=""):
    suffix = f" [{detail}]" if detail else ""
    print(f"ACCEPTANCE {num} ({name}): PASS{suffix}")


def signed_patterns(n, s):
    for T in combinations(range(n), s):
        for bits in np.ndindex(*(2,) * s):
            x = np.zeros(n)
            x[list(T)] = [1.0 if b else -1.0 for b in bits]
            yield T, x


# --- shared instance collections -------------------------------------------


@pytest.fixture(scope="module")
def certified_suite():
    """>= 50 seeded (A, D, s) with nsp_check(AD, s) certified (criterion 2).

    Each seed is probed at order 2 first, then order 1; at the pinned
    dimensions (m=6, n=12) order-2 certificates are unattainable, so the
    suite is populated by order-1 certificates.
    """
    instances = []
    seed = 0
    while len(instances) < 50 and seed < 400:
        rng = np.random.default_rng(seed)
        D = Frame(frames.normalized_columns(rng.standard_normal((8, 12))))
        A = frames.gaussian_matrix(6, 8, seed + 1000)
        M = A @ D.matrix
        for s in (2, 1):
            if nspcert.nsp_check(M, s, early_exit=True).holds:
                instances.append((A, D, s))
                break
        seed += 1
    return instances


@pytest.fixture(scope="module")
def exact_tiny_suite():
    """>= 50 seeded (A, D, c) with composite nullity 2 and certified order-2
    NSP, so the strengthened margin c is exactly computable (criterion 7)."""
    instances = []
    seed = 0
    while len(instances) < 50 and seed < 300:
        rng = np.random.default_rng(seed)
        D = Frame(frames.normalized_columns(rng.standard_normal((10, 11))))
        A = frames.gaussian_matrix(9, 10, seed + 7000)
        M = A @ D.matrix
        if matcore.nullspace_basis(M).shape[1] == 2:
            if nspcert.nsp_check(M, 2, early_exit=True).holds:
                c, mode = stability.stability_constant_estimate(A, D, 2)
                assert mode == MODE_EXACT_TINY
                if c > 0:
                    instances.append((A, D, c))
        seed += 1
    return instances


# --- criteria ----------------------------------------------------------------


def test_criterion_1_solver_certification():
    start = time.perf_counter()
    rng = np.random.default_rng(2026)
    for i in range(100):
        if i % 2 == 0:
            n = int(rng.integers(3, 12))
            M = np.eye(n)
            x0 = rng.standard_normal(n)
        else:
            m, n = int(rng.integers(2, 7)), int(rng.integers(4, 12))
            M = rng.standard_normal((m, n))
            x0 = np.zeros(n)
            sup = rng.choice(n, size=min(2, n), replace=False)
            x0[sup] = rng.standard_normal(sup.size)
        y = M @ x0
        rep = solvers.basis_pursuit(M, y)
        assert rep.status == solvers.OPTIMAL
        lam = rep.dual_certificate
        assert np.abs(M.T @ lam).max() <= 1.0 + 1e-12
        assert rep.objective - y @ lam <= 1e-8
        rep2 = solvers.bpdn(M, y, 0.0)
        assert abs(rep2.objective - rep.objective) <= 1e-7
    elapsed = time.perf_counter() - start
    assert elapsed < 30.0
    report(1, "solver certification", f"100 instances, {elapsed:.1f}s")


def test_criterion_2_oracle_equivalence(certified_suite):
    start = time.perf_counter()
    assert len(certified_suite) >= 50
    for A, D, s in certified_suite:
        M = A @ D.matrix
        for T, x0 in signed_patterns(D.n, s):
            z0 = D.matrix @ x0
            res = solvers.l1_synthesis(A, D, M @ x0, 0.0)
            assert np.linalg.norm(res.signal - z0) / np.linalg.norm(z0) <= 1e-6
            x_oracle, _ = solvers.l0_oracle(A, D, M @ x0, s)
            z_oracle = D.matrix @ x_oracle
            assert np.linalg.norm(res.signal - z_oracle) <= 1e-6 * (1 + np.linalg.norm(z0))
    elapsed = time.perf_counter() - start
    assert elapsed < 300.0
    orders = sorted({s for *_, s in certified_suite})
    report(2, "oracle equivalence",
           f"{len(certified_suite)} certified instances, orders {orders}, {elapsed:.1f}s")


def test_criterion_3_witness_validity():
    found = 0
    seed = 0
    while found < 30 and seed < 120:
        rng = np.random.default_rng(seed)
        seed += 1
        D = Frame(frames.normalized_columns(rng.standard_normal((8, 10))))
        A = frames.gaussian_matrix(5, 8, seed + 3000)
        cert = nspcert.nsp_check(A @ D.matrix, 2)
        if cert.holds:
            continue
        found += 1
        T = list(cert.worst_support)
        coeffs = np.zeros(10)
        coeffs[T] = cert.witness[T]
        z0 = D.matrix @ coeffs
        res = solvers.l1_synthesis(A, D, A @ z0, 0.0)
        err = np.linalg.norm(res.signal - z0) / np.linalg.norm(z0)
        assert err > 1e-5
    assert found == 30
    report(3, "witness validity", "30 failing instances, all witnesses fail recovery")


def test_criterion_4_full_spark_equivalence():
    certified = refuted = 0
    for seed in range(20):
        D = frames.build_coherent_frame(6, 0.4 + 0.05 * seed, seed)
        A = frames.gaussian_matrix(5, 6, seed + 11000)
        verdict = nspcert.certify_dict_nsp_full_spark(A, D, 1)
        falsified = nspcert.falsify_dict_nsp(A, D, 1, trials=10_000, seed=seed + 1)
        if verdict.verdict == CERTIFIED:
            certified += 1
            assert falsified.verdict == UNDETERMINED
            assert falsified.trials_run >= 10_000
        else:
            refuted += 1
            assert verdict.verdict == REFUTED
            assert verdict.witness_error > 1e-5
            assert falsified.verdict == REFUTED
    assert certified + refuted == 20
    assert certified > 0 and refuted > 0
    report(4, "full-spark equivalence",
           f"{certified} certified / {refuted} refuted, no contradictions")


def test_criterion_5_inadmissibility_demo():
    start = time.perf_counter()
    record = experiments.run_inadmissibility_demo(10, 0.05, (0, 10), seed=7)
    assert record.norm_on_support == pytest.approx(2.05, abs=1e-12)
    assert record.norm_off_support == pytest.approx(0.45, abs=1e-12)
    assert record.norm_on_support > record.norm_off_support
    assert record.worst_error > 1e-5
    elapsed = time.perf_counter() - start
    assert elapsed < 10.0
    report(5, "inadmissibility demo",
           f"premise 2.05 > 0.45, worst error {record.worst_error:.3f}, {elapsed:.1f}s")


def test_criterion_6_table_replication():
    start = time.perf_counter()
    perturbations = (0.0, 1e-4, 1e-3, 3e-3, 9e-3)
    sparsities = (2, 3)
    seeds = range(5)
    mean_e_z = {s: np.zeros(len(perturbations)) for s in sparsities}
    for seed in seeds:
        cfg = experiments.ExperimentConfig(
            d=50, m=30, trials=100, sparsity_levels=sparsities,
            perturbations=perturbations, seed=seed,
        )
        table = experiments.run_recovery_experiment(cfg)
        row0 = table.rows[0]
        for s in sparsities:
            assert row0.e_z[s] <= 1e-5, f"seed {seed}: E_z_{s} = {row0.e_z[s]}"
            assert row0.e_x[s] >= 0.1, f"seed {seed}: E_x_{s} = {row0.e_x[s]}"
        for i, row in enumerate(table.rows):
            for s in sparsities:
                mean_e_z[s][i] += row.e_z[s] / len(seeds)
    for s in sparsities:
        means = mean_e_z[s]
        assert all(means[i] <= means[i + 1] + 1e-12 for i in range(len(means) - 1)), (
            f"mean E_z_{s} not nondecreasing: {means}"
        )
    elapsed = time.perf_counter() - start
    assert elapsed < 600.0
    report(6, "table replication",
           f"5 seeds, E_z<=1e-5 and E_x>=0.1 at perturbation 0, monotone means, {elapsed:.0f}s")


def test_criterion_7_stability_bounds(exact_tiny_suite):
    assert len(exact_tiny_suite) >= 50
    # Exact-margin validation: the refined value lower-bounds a one-million
    # point sweep of the kernel circle.
    A0, D0, c0 = exact_tiny_suite[0]
    sweep = sweep_margin_ratio(A0, D0, 2, num_thetas=1_000_000)
    assert c0 <= sweep + 1e-6
    assert sweep - c0 <= 1e-4

    eps = 0.01
    draws = 0
    for A, D, c in exact_tiny_suite:
        nu_a = matcore.smallest_positive_singular(A)
        nu_d = matcore.smallest_positive_singular(D.matrix)
        bound = stability.noisy_recovery_bound(
            BoundInputs(c=c, nu_a=nu_a, nu_d=nu_d, n=D.n, eps=eps)
        )
        for trial in range(4):
            rng = np.random.default_rng(10_000 + draws)
            x0 = np.zeros(D.n)
            sup = rng.choice(D.n, size=2, replace=False)
            x0[sup] = rng.standard_normal(2)
            z0 = D.matrix @ x0
            w = rng.standard_normal(A.shape[0])
            w *= eps * rng.uniform(0.0, 1.0) / np.linalg.norm(w)
            res = solvers.l1_synthesis(A, D, A @ z0 + w, eps)
            assert np.linalg.norm(res.signal - z0) <= bound + 1e-6
            draws += 1

    # Perturbed-dictionary protocol: solve with the perturbed dictionary and
    # the enlarged radius; the bound uses the certified nearby instance.
    delta = 0.02
    perturbed_checks = 0
    for A, D, c in exact_tiny_suite[:10]:
        nu_a = matcore.smallest_positive_singular(A)
        nu_d = matcore.smallest_positive_singular(D.matrix)
        a_spec = float(np.linalg.norm(A, 2))
        for trial in range(3):
            rng = np.random.default_rng(20_000 + perturbed_checks)
            E = rng.standard_normal(D.matrix.shape)
            E *= delta / np.max(np.linalg.norm(E, axis=0))
            D_pert = Frame(D.matrix + E)
            x0 = np.zeros(D.n)
            sup = rng.choice(D.n, size=2, replace=False)
            x0[sup] = rng.standard_normal(2)
            z0 = D_pert.matrix @ x0
            w = rng.standard_normal(A.shape[0])
            w *= eps * rng.uniform(0.0, 1.0) / np.linalg.norm(w)
            inputs = BoundInputs(
                c=c, nu_a=nu_a, nu_d=nu_d, n=D.n, eps=eps, delta=delta,
                a_spectral=a_spec, x0_l1=float(np.abs(x0).sum()),
            )
            rho, bound = stability.perturbed_dictionary_bound(inputs)
            res = solvers.l1_synthesis(A, D_pert, A @ z0 + w, rho)
            assert np.linalg.norm(res.signal - z0) <= bound + 1e-6
            perturbed_checks += 1
    assert perturbed_checks == 30
    report(7, "stability bounds",
           f"{len(exact_tiny_suite)} exact instances x4 draws, 30 perturbed checks")


def test_criterion_8_kernel_decomposition():
    rng = np.random.default_rng(808)
    for _ in range(1000):
        rows = int(rng.integers(1, 12))
        cols = int(rng.integers(1, 12))
        M = rng.standard_normal((rows, cols))
        h = rng.standard_normal(cols)
        a, b = matcore.decompose_along_kernel(M, h)
        assert np.linalg.norm(a + b - h) <= 1e-9
        assert np.linalg.norm(M @ a) <= 1e-9 * (1 + np.linalg.norm(M))
        N = matcore.nullspace_basis(M)
        if N.shape[1]:
            assert np.linalg.norm(N.T @ b) <= 1e-9
        nu = matcore.smallest_positive_singular(M)
        assert np.linalg.norm(b) <= np.linalg.norm(M @ h) / nu + 1e-9
    report(8, "kernel decomposition", "1000 seeded pairs, all invariants at 1e-9")


def test_criterion_9_coherence_bound():
    confirmed = 0
    seed = 0
    while confirmed < 100 and seed < 1200:
        rng = np.random.default_rng(seed)
        seed += 1
        M = frames.normalized_columns(rng.standard_normal((10, 12)))
        if not nspcert.nsp_check(M, 2, early_exit=True).holds:
            continue
        bound, satisfied = nspcert.coherence_bound_check(Frame(M))
        assert satisfied, f"seed {seed}: mu >= {bound}"
        confirmed += 1
    assert confirmed == 100
    report(9, "coherence bound", "100 order-2-certified frames, zero exceptions")


def test_criterion_10_duplicate_column_preservation(certified_suite):
    checked = 0
    for A, D, s in certified_suite[:20]:
        M = A @ D.matrix
        # Baseline suite passes (criterion 2); now lift by duplicating an atom.
        dup = D.n - 1
        D_lift = Frame(np.hstack([D.matrix, D.matrix[:, dup : dup + 1]]), D.tol)
        M_lift = A @ D_lift.matrix
        for T, x0 in signed_patterns(D_lift.n, s):
            z0 = D_lift.matrix @ x0
            res = solvers.l1_synthesis(A, D_lift, M_lift @ x0, 0.0)
            assert np.linalg.norm(res.signal - z0) / np.linalg.norm(z0) <= 1e-6
        checked += 1
    assert checked == 20
    report(10, "duplicate-column preservation", "20 lifted suites, recovery preserved")
