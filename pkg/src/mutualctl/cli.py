"""Command-line front end.

    mutualctl analyze FILE
    mutualctl solve FILE [--tol TOL] [--max-iter N] [--grid M] [--theta TH] [--out CSV]
    mutualctl verify FILE --solution CSV [--tol TOL] [--refine R]
    mutualctl demo {linear,sinpair,prey} [--out FILE]

Exit codes: 0 success, 2 no regime feasible (analyze), 3 no convergence
(solve) or failed check (verify), 4 bad input of any kind.

Reports mix prose with ``#kv key=value`` lines meant for scripts. The
environment variable MUTUALCTL_THREADS is reserved and currently ignored;
every command runs single-threaded.
"""

import argparse
import sys

import numpy as np

from .demos import DEMO_NAMES, demo_text
from .estimator import MutualControlSolver
from .exceptions import MutualControlError
from .model import classify
from .problemfile import atomic_write, read_csv, read_problem, write_csv
from .solver import SemigroupCache
from .verify import residual_report

EXIT_OK = 0
EXIT_INFEASIBLE = 2
EXIT_FAILED = 3
EXIT_INPUT = 4


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad usage, which would collide with "infeasible"
    def error(self, message):
        raise _UsageError(f"{self.prog}: {message}")


def _g(value):
    return "%.6g" % value


def _r(value):
    return "%.17g" % value


def _vec(values):
    return ",".join(_r(v) for v in np.atleast_1d(values))


def _kv(out, key, value):
    print(f"#kv {key}={value}", file=out)


def _regime_block(out, name, result):
    state = "feasible" if result.feasible else "infeasible"
    print(f"{name}: {state}. {result.reason}", file=out)
    _kv(out, f"{name}.feasible", str(bool(result.feasible)).lower())
    c = result.coefficients
    if c is not None:
        print(f"  coefficients a11={_g(c.a11)} a12={_g(c.a12)} a21={_g(c.a21)} "
              f"a22={_g(c.a22)} T={_g(c.T)} tau={_g(c.tau)}", file=out)
        _kv(out, f"{name}.coefficients", ",".join(_r(v) for v in c.as_tuple()))
    a = result.analysis
    if a is not None:
        _kv(out, f"{name}.classification", a.classification.value)
        _kv(out, f"{name}.h0", _g(a.h_at_zero))
        if a.theta_star is not None:
            _kv(out, f"{name}.theta", _r(a.theta_star))
        if a.h_at_min is not None:
            _kv(out, f"{name}.h_theta", _g(a.h_at_min))
        elif a.theta_star is not None:
            _kv(out, f"{name}.h_theta", _g(a.h_at_zero))
        if a.interval is not None:
            _kv(out, f"{name}.interval", f"{_g(a.interval[0])},{_g(a.interval[1])}")
    if result.radii is not None:
        print(f"  invariant ball radii R1={_g(result.radii[0])} R2={_g(result.radii[1])}",
              file=out)
        _kv(out, f"{name}.radii", _vec(result.radii))
    if result.contraction is not None:
        _kv(out, f"{name}.factor", _g(result.contraction))


def cmd_analyze(args, out):
    problem, _ = read_problem(args.file)
    report = classify(problem)
    print(f"semigroup bounds C_A={_g(report.C_A)} C_B={_g(report.C_B)}", file=out)
    _kv(out, "C_A", _r(report.C_A))
    _kv(out, "C_B", _r(report.C_B))
    _kv(out, "certified", str(report.certified).lower())
    for note in report.notes:
        print(f"note: {note}", file=out)
    for name in ("perov", "schauder", "avramescu"):
        _regime_block(out, name, getattr(report, name))
    feasible = report.any_feasible
    print("some regime is feasible" if feasible else "no regime is feasible", file=out)
    _kv(out, "feasible", str(feasible).lower())
    return EXIT_OK if feasible else EXIT_INFEASIBLE


def cmd_solve(args, out):
    problem, settings = read_problem(args.file)
    est = MutualControlSolver(
        grid=args.grid if args.grid is not None else settings.grid,
        tol=args.tol if args.tol is not None else settings.tol,
        max_iter=args.max_iter if args.max_iter is not None else settings.max_iter,
        theta=args.theta if args.theta is not None else settings.theta,
    )
    est.fit(problem)
    rep = est.solve_report_
    if args.out:
        write_csv(args.out, est.trajectories_)
    state = "converged" if rep.converged else "did not converge"
    print(f"Picard iteration {state} after {rep.iterations} iterations "
          f"(regime {rep.regime}, theta={_g(rep.theta)})", file=out)
    if rep.heuristic:
        print("note: no contraction certificate; error bound unavailable", file=out)
    _kv(out, "converged", str(rep.converged).lower())
    _kv(out, "iterations", rep.iterations)
    _kv(out, "regime", rep.regime)
    _kv(out, "theta", _r(rep.theta))
    _kv(out, "residual", _vec(rep.residual))
    if rep.error_bound is not None:
        _kv(out, "error_bound", _vec(rep.error_bound))
    _kv(out, "x0", _vec(rep.x0))
    _kv(out, "terminal_gap", _r(rep.terminal_gap))
    _kv(out, "heuristic", str(rep.heuristic).lower())
    if args.out:
        _kv(out, "csv", args.out)
    return EXIT_OK if rep.converged else EXIT_FAILED


def cmd_verify(args, out):
    problem, _ = read_problem(args.file)
    pair = read_csv(args.solution, problem.n, problem.T)
    cache = SemigroupCache(problem, pair.m)
    rep = residual_report(pair, problem, cache, args.refine)
    ok = rep.passed(args.tol)
    print(f"verification {'passed' if ok else 'failed'} at tol={_g(args.tol)} "
          f"(m={rep.m}, RK4 refine={rep.refine})", file=out)
    _kv(out, "passed", str(ok).lower())
    _kv(out, "terminal_gap", _r(rep.terminal_gap))
    _kv(out, "integral_residual", _vec(rep.integral_residual))
    _kv(out, "ode_deviation", _r(rep.ode_deviation))
    _kv(out, "m", rep.m)
    return EXIT_OK if ok else EXIT_FAILED


def cmd_demo(args, out):
    if args.name not in DEMO_NAMES:
        raise _UsageError(f"unknown demo {args.name!r}; choose from {', '.join(DEMO_NAMES)}")
    text = demo_text(args.name)
    if args.out:
        atomic_write(args.out, text)
        print(f"wrote demo {args.name} to {args.out}", file=out)
    else:
        out.write(text)
    return EXIT_OK


def build_parser():
    parser = _Parser(prog="mutualctl",
                     description="Mutual control problems for coupled semilinear systems.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("analyze", help="classify a problem file")
    p.add_argument("file")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("solve", help="solve by Picard iteration")
    p.add_argument("file")
    p.add_argument("--tol", type=float)
    p.add_argument("--max-iter", type=int)
    p.add_argument("--grid", type=int)
    p.add_argument("--theta", type=float)
    p.add_argument("--out", help="trajectory CSV to write")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("verify", help="check a trajectory CSV")
    p.add_argument("file")
    p.add_argument("--solution", required=True)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--refine", type=int, default=1)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("demo", help="write a bundled problem file")
    # validated by hand so an unknown name exits 4 with the list of names
    p.add_argument("name")
    p.add_argument("--out")
    p.set_defaults(func=cmd_demo)
    return parser


def main(argv=None, out=None):
    out = out or sys.stdout
    try:
        args = build_parser().parse_args(argv)
        return args.func(args, out)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (MutualControlError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
