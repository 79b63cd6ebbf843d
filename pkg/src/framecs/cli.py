"""Command-line front end.

Every subcommand is a thin adapter over the library: it parses arguments,
loads matrices from the shared text format, calls exactly one library
operation, and prints a flat key=value block (CSV for ``experiment``).
Index sets are 1-based on the command line and in printed output.

Exit codes: 0 success, 2 usage error (nothing is computed or written),
1 computational error (infeasible system, exceeded budget, failed premise,
unreadable files, dimension mismatches).
"""

from __future__ import annotations

import argparse
import math
import sys

import numpy as np

from . import matcore, stability
from .errors import FramecsError, InvalidInput
from .experiments import (
    format_report,
    read_config,
    run_inadmissibility_demo,
    run_recovery_experiment,
    write_report,
)
from .frames import DEFAULT_SUBSET_BUDGET, Frame, frame_stats
from .nspcert import (
    certify_dict_nsp_full_spark,
    falsify_dict_nsp,
    injectivity_check,
    nsp_check,
)
from .solvers import (
    INFEASIBLE,
    SolverOptions,
    l0_oracle,
    l1_analysis,
    l1_synthesis,
)


def _solver_options(args) -> SolverOptions:
    return SolverOptions(
        feas_tol=args.feas_tol, opt_tol=args.opt_tol, max_iter=args.max_iter
    )


def _emit(lines, out_path):
    text = "\n".join(lines) + "\n"
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isinf(value):
            return "inf"
        return format(value, ".17g")
    return str(value)


def _support_1based(support) -> str:
    return ",".join(str(int(i) + 1) for i in support)


def _load_frame(path, tol):
    return Frame(matcore.read_matrix(path), tol)


def _check_compatible(A, D, y=None):
    if A.shape[1] != D.matrix.shape[0]:
        raise InvalidInput(
            f"dimension mismatch: A is {A.shape[0]}x{A.shape[1]} but "
            f"D is {D.matrix.shape[0]}x{D.matrix.shape[1]}"
        )
    if y is not None and y.size != A.shape[0]:
        raise InvalidInput(
            f"dimension mismatch: A is {A.shape[0]}x{A.shape[1]} but y has length {y.size}"
        )


def _cmd_frame_info(args):
    D = _load_frame(args.matrix, args.tol)
    stats = frame_stats(D, budget=args.budget)
    spark_str = "inf" if math.isinf(stats.spark) else str(int(stats.spark))
    _emit(
        [
            f"d={D.d}",
            f"n={D.n}",
            f"coherence={_fmt(stats.coherence)}",
            f"A={_fmt(stats.frame_bound_lower)}",
            f"B={_fmt(stats.frame_bound_upper)}",
            f"spark={spark_str}",
            f"full_spark={_fmt(stats.full_spark)}",
            f"nu_D={_fmt(stats.nu)}",
        ],
        args.out,
    )
    return 0


def _cmd_check_nsp(args):
    M = matcore.read_matrix(args.matrix)
    cert = nsp_check(M, args.s, budget=args.budget)
    lines = [
        f"order={cert.order}",
        f"holds={_fmt(cert.holds)}",
        f"worst_support={_support_1based(cert.worst_support)}",
        f"worst_value={_fmt(cert.worst_value)}",
    ]
    if cert.witness is not None:
        lines.append("witness=" + ",".join(format(v, ".17g") for v in cert.witness))
    _emit(lines, args.out)
    return 0


def _cmd_check_dnsp(args):
    A = matcore.read_matrix(args.sensing)
    D = _load_frame(args.dictionary, args.tol)
    _check_compatible(A, D)
    opts = _solver_options(args)
    if args.trials is not None:
        verdict = falsify_dict_nsp(
            A, D, args.s, trials=args.trials, seed=args.seed,
            budget=args.budget, opts=opts,
        )
    else:
        verdict = certify_dict_nsp_full_spark(A, D, args.s, budget=args.budget, opts=opts)
    lines = [
        f"order={verdict.order}",
        f"method={verdict.method}",
        f"verdict={verdict.verdict}",
        f"sensing_rank={verdict.sensing_rank}",
        f"trials_run={verdict.trials_run}",
    ]
    if verdict.counterexample is not None:
        lines.append(f"counterexample_support={_support_1based(verdict.counterexample.support)}")
        lines.append(f"witness_error={_fmt(verdict.witness_error)}")
    _emit(lines, args.out)
    return 0


def _cmd_check_injectivity(args):
    A = matcore.read_matrix(args.sensing)
    D = _load_frame(args.dictionary, args.tol)
    _check_compatible(A, D)
    ok = injectivity_check(A, D, args.s, budget=args.budget)
    _emit([f"order={args.s}", f"injective={_fmt(ok)}"], args.out)
    return 0


def _solve_common(args, analysis: bool):
    A = matcore.read_matrix(args.sensing)
    D = _load_frame(args.dictionary, args.tol)
    y = matcore.read_vector(args.measurements)
    _check_compatible(A, D, y)
    opts = _solver_options(args)
    prefix = args.out or ("analysis" if analysis else "solution")
    if analysis:
        report = l1_analysis(A, D, y, args.eps, opts)
        matcore.write_vector(prefix + "_signal.csv", report.minimizer)
        extra = [f"signal_file={prefix}_signal.csv"]
    else:
        result = l1_synthesis(A, D, y, args.eps, opts)
        report = result.coefficients
        matcore.write_vector(prefix + "_coefficients.csv", report.minimizer)
        matcore.write_vector(prefix + "_signal.csv", result.signal)
        extra = [
            f"coefficients_file={prefix}_coefficients.csv",
            f"signal_file={prefix}_signal.csv",
        ]
    lines = [
        f"status={report.status}",
        f"objective={_fmt(report.objective)}",
        f"feasibility_residual={_fmt(report.feasibility_residual)}",
        f"optimality_gap={_fmt(report.optimality_gap)}",
        f"iterations={report.iterations}",
    ] + extra
    _emit(lines, None)
    return 1 if report.status == INFEASIBLE else 0


def _cmd_solve(args):
    return _solve_common(args, analysis=False)


def _cmd_analyze(args):
    return _solve_common(args, analysis=True)


def _cmd_oracle(args):
    A = matcore.read_matrix(args.sensing)
    D = _load_frame(args.dictionary, args.tol)
    y = matcore.read_vector(args.measurements)
    _check_compatible(A, D, y)
    x, sparsity = l0_oracle(A, D, y, args.s, budget=args.budget)
    prefix = args.out or "oracle"
    matcore.write_vector(prefix + "_coefficients.csv", x)
    support = np.nonzero(x)[0]
    _emit(
        [
            f"sparsity={sparsity}",
            f"support={_support_1based(support)}",
            f"coefficients_file={prefix}_coefficients.csv",
        ],
        None,
    )
    return 0


def _cmd_bounds(args):
    A = matcore.read_matrix(args.sensing)
    D = _load_frame(args.dictionary, args.tol)
    x0 = matcore.read_vector(args.coefficients)
    _check_compatible(A, D)
    if x0.size != D.n:
        raise InvalidInput(
            f"dimension mismatch: D is {D.d}x{D.n} but x0 has length {x0.size}"
        )
    c_hat, mode = stability.stability_constant_estimate(A, D, args.s, seed=args.seed)
    if c_hat <= 0:
        _emit([f"c={_fmt(c_hat)}", f"c_mode={mode}", "verdict=margin_violated"], args.out)
        return 1
    inputs = stability.BoundInputs(
        c=c_hat,
        nu_a=matcore.smallest_positive_singular(A),
        nu_d=matcore.smallest_positive_singular(D.matrix),
        n=D.n,
        eps=args.eps,
        delta=args.delta,
        a_spectral=float(np.linalg.norm(A, 2)),
        x0_l1=float(np.abs(x0).sum()),
        sigma_s_x0=stability.best_s_term_residual(x0, args.s),
    )
    if args.verbose:
        nu_ad = matcore.smallest_positive_singular(A @ D.matrix)
        lines = stability.verbose_bound_report(inputs, nu_ad=nu_ad, c_mode=mode).splitlines()
    else:
        lines = [
            f"c={_fmt(c_hat)}",
            f"c_mode={mode}",
            f"signal_bound={_fmt(stability.noisy_recovery_bound(inputs))}",
        ]
        if args.delta > 0:
            rho, bound = stability.perturbed_dictionary_bound(inputs)
            lines += [f"rho={_fmt(rho)}", f"perturbed_bound={_fmt(bound)}"]
    _emit(lines, args.out)
    return 0


def _cmd_experiment(args):
    cfg = read_config(args.config)
    table = run_recovery_experiment(cfg)
    if args.out:
        write_report(table, args.out)
    else:
        sys.stdout.write(format_report(table))
    return 0


def _cmd_demo(args):
    support = tuple(int(tok) - 1 for tok in args.support.split(","))
    record = run_inadmissibility_demo(
        args.d, args.eps, support, args.seed, trials=args.trials or 25,
        opts=_solver_options(args),
    )
    _emit(
        [
            f"d={record.d}",
            f"eps={_fmt(record.eps)}",
            f"support={_support_1based(record.support)}",
            f"norm_on_support={_fmt(record.norm_on_support)}",
            f"norm_off_support={_fmt(record.norm_off_support)}",
            f"premise_holds={_fmt(record.premise_holds)}",
            f"worst_error={_fmt(record.worst_error)}",
            f"failure_threshold={_fmt(record.threshold)}",
            f"failure_detected={_fmt(record.worst_error > record.threshold)}",
        ],
        args.out,
    )
    return 0


def _add_common(parser, *, tol=True):
    parser.add_argument("--feas-tol", type=float, default=1e-9, dest="feas_tol")
    parser.add_argument("--opt-tol", type=float, default=1e-8, dest="opt_tol")
    parser.add_argument("--max-iter", type=int, default=100_000, dest="max_iter")
    parser.add_argument("--budget", type=int, default=DEFAULT_SUBSET_BUDGET)
    parser.add_argument("--out", default=None)
    parser.add_argument("--verbose", action="store_true")
    if tol:
        parser.add_argument("--tol", type=float, default=matcore.DEFAULT_TOL)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="framecs",
        description="Dictionary-based compressed sensing toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("frame-info", help="coherence, frame bounds, spark of a dictionary")
    p.add_argument("matrix")
    _add_common(p)
    p.set_defaults(func=_cmd_frame_info)

    p = sub.add_parser("check-nsp", help="exact null-space-property certificate")
    p.add_argument("matrix")
    p.add_argument("--s", type=int, required=True)
    _add_common(p)
    p.set_defaults(func=_cmd_check_nsp)

    p = sub.add_parser("check-dnsp", help="dictionary NSP: certify (full spark) or falsify")
    p.add_argument("sensing")
    p.add_argument("dictionary")
    p.add_argument("--s", type=int, required=True)
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    _add_common(p)
    p.set_defaults(func=_cmd_check_dnsp)

    p = sub.add_parser("check-injectivity", help="rank test for unique sparse decoding")
    p.add_argument("sensing")
    p.add_argument("dictionary")
    p.add_argument("--s", type=int, required=True)
    _add_common(p)
    p.set_defaults(func=_cmd_check_injectivity)

    p = sub.add_parser("solve", help="l1-synthesis decoding (coefficients + signal)")
    p.add_argument("sensing")
    p.add_argument("dictionary")
    p.add_argument("measurements")
    p.add_argument("--eps", type=float, default=0.0)
    _add_common(p)
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("analyze", help="l1-analysis decoding")
    p.add_argument("sensing")
    p.add_argument("dictionary")
    p.add_argument("measurements")
    p.add_argument("--eps", type=float, default=0.0)
    _add_common(p)
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("oracle", help="exhaustive minimal-support decoder")
    p.add_argument("sensing")
    p.add_argument("dictionary")
    p.add_argument("measurements")
    p.add_argument("--s", type=int, required=True, help="largest support size to try")
    _add_common(p)
    p.set_defaults(func=_cmd_oracle)

    p = sub.add_parser("bounds", help="stability-bound report for an instance")
    p.add_argument("sensing")
    p.add_argument("dictionary")
    p.add_argument("coefficients")
    p.add_argument("--s", type=int, required=True)
    p.add_argument("--eps", type=float, default=0.0)
    p.add_argument("--delta", type=float, default=0.0)
    p.add_argument("--seed", type=int, required=True)
    _add_common(p)
    p.set_defaults(func=_cmd_bounds)

    p = sub.add_parser("experiment", help="run the perturbation/sparsity recovery grid")
    p.add_argument("--config", required=True)
    _add_common(p)
    p.set_defaults(func=_cmd_experiment)

    p = sub.add_parser("demo-example1", help="recovery failure on the spiked-identity frame")
    p.add_argument("d", type=int)
    p.add_argument("support", help="1-based indices, comma-separated; must include first and last")
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--trials", type=int, default=None)
    _add_common(p)
    p.set_defaults(func=_cmd_demo)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "check-dnsp" and args.trials is not None and args.seed is None:
        parser.error("--trials (falsification) requires an explicit --seed")
    try:
        return args.func(args)
    except FramecsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
