"""Command-line experiment runner.

Subcommands: `run` (one algorithm), `bench` (algorithm suite), `phistar`
(high-accuracy optimum), `check` (verification suite), `toygen` (emit
synthetic problem files). Exit codes: 0 success, 1 input error, 2 run abort.
"""

import argparse
import sys

import numpy as np

from .errors import ConfigError, DivergenceError, InputError
from .harness import (ALGORITHMS, ExperimentSpec, cached_phi_star,
                      run_benchmark)
from .problems import (TOY_KINDS, build_bellman, build_mean_variance,
                       build_toy, load_returns_csv, random_bellman_spec,
                       synthetic_returns, write_returns_csv)
from .verify import all_passed, run_all_checks, write_report_csv


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse variant that reports usage errors via exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise _UsageError(message)


def _add_problem_flags(parser):
    parser.add_argument("--problem", choices=("meanvar", "bellman", "toy"),
                        default="meanvar")
    parser.add_argument("--data", default=None, help="returns CSV (meanvar)")
    parser.add_argument("--lambda", dest="lam", type=float, default=1e-2,
                        help="l1 weight")
    parser.add_argument("--radius", type=float, default=1.0, help="box radius")
    parser.add_argument("--n", type=int, default=200,
                        help="synthetic sample count (meanvar rows / bellman matrices)")
    parser.add_argument("--d", type=int, default=10, help="decision dimension")
    parser.add_argument("--states", type=int, default=10, help="bellman state count")
    parser.add_argument("--gamma", type=float, default=0.9, help="bellman discount")
    parser.add_argument("--toy-kind", choices=TOY_KINDS, default="affine")
    parser.add_argument("--problem-seed", type=int, default=0,
                        help="seed for synthetic problem generation")


def _add_algo_flags(parser):
    parser.add_argument("--k0", type=int, default=10, help="first epoch length")
    parser.add_argument("--epochs", type=int, default=None,
                        help="epoch count S (default: fit to budget)")
    parser.add_argument("--eta", type=float, default=0.01, help="base step size")
    parser.add_argument("--a", type=int, default=5, help="inner batch size")
    parser.add_argument("--b", type=int, default=5, help="outer batch size")
    parser.add_argument("--budget", type=float, default=30.0,
                        help="sample budget in units of N")
    parser.add_argument("--seed", default="0", help="comma-separated seed list")
    parser.add_argument("--schedule", choices=("adaptive", "constant"),
                        default="adaptive")
    parser.add_argument("--out", default="trace.csv", help="output CSV path")


def _build_problem(args):
    if args.problem == "meanvar":
        if args.data is not None:
            dataset = load_returns_csv(args.data)
        else:
            dataset = synthetic_returns(args.n, args.d, args.problem_seed)
        return build_mean_variance(dataset, lam=args.lam, radius=args.radius)
    if args.problem == "bellman":
        spec = random_bellman_spec(args.states, args.n, args.gamma, args.problem_seed)
        return build_bellman(spec, lam=args.lam, radius=args.radius)
    return build_toy(args.toy_kind, d=args.d, seed=args.problem_seed,
                     lam=args.lam, radius=args.radius)


def _parse_seeds(raw):
    try:
        return [int(s) for s in raw.split(",") if s.strip() != ""]
    except ValueError as exc:
        raise InputError(f"bad seed list {raw!r}: {exc}") from None


def _parse_algos(raw):
    algos = [a.strip() for a in raw.split(",") if a.strip()]
    unknown = [a for a in algos if a not in ALGORITHMS]
    if unknown:
        raise InputError(f"unknown algorithms {unknown}; choose from {ALGORITHMS}")
    return algos


def _bench(args, algos):
    problem = _build_problem(args)
    params = {"a": args.a, "b": args.b}
    algo_params = {}
    for algo in algos:
        p = dict(params)
        if algo == "scvrg":
            p.update(k0=args.k0, eta=args.eta, schedule=args.schedule)
            if args.epochs is not None:
                p["S"] = args.epochs
        elif algo == "vrscpg":
            p.update(eta=args.eta)
        algo_params[algo] = p
    spec = ExperimentSpec(problem=problem, algorithms=algos, budget=args.budget,
                          seeds=_parse_seeds(args.seed), out=args.out,
                          algo_params=algo_params)
    path = run_benchmark(spec)
    print(f"wrote {path}")
    return 0


def _phistar(args):
    problem = _build_problem(args)
    N = getattr(problem, "N", max(problem.dims.m, problem.dims.n))
    budget = max(int(args.budget * N), 100 * (problem.dims.m + problem.dims.n))
    value = cached_phi_star(problem, budget)
    print(repr(value))
    return 0


def _check(args):
    reports = run_all_checks(seed=args.check_seed, trials=args.trials)
    for report in reports:
        print(report.format_line())
    if args.out is not None:
        write_report_csv(reports, args.out)
        print(f"wrote {args.out}")
    return 0 if all_passed(reports) else 1


def _toygen(args):
    if args.problem == "meanvar":
        dataset = synthetic_returns(args.n, args.d, args.problem_seed)
        write_returns_csv(dataset, args.out)
    elif args.problem == "bellman":
        spec = random_bellman_spec(args.states, args.n, args.gamma, args.problem_seed)
        np.savez(args.out, P=spec.P, r=spec.r, gamma=spec.gamma)
    else:
        problem = build_toy(args.toy_kind, d=args.d, seed=args.problem_seed,
                            lam=args.lam, radius=args.radius)
        arrays = {name: getattr(problem, name) for name in ("A", "b", "centers")
                  if getattr(problem, name, None) is not None}
        np.savez(args.out, kind=args.toy_kind, **arrays)
    print(f"wrote {args.out}")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="compopt")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", parents=[], help="run a single algorithm")
    _add_problem_flags(p_run)
    _add_algo_flags(p_run)
    p_run.add_argument("--algo", default="scvrg",
                       help="one algorithm: " + ",".join(ALGORITHMS))

    p_bench = sub.add_parser("bench", help="run an algorithm suite")
    _add_problem_flags(p_bench)
    _add_algo_flags(p_bench)
    p_bench.add_argument("--algo", default="scvrg,vrscpg",
                         help="comma-separated algorithms")

    p_phi = sub.add_parser("phistar", help="compute a high-accuracy optimum")
    _add_problem_flags(p_phi)
    p_phi.add_argument("--budget", type=float, default=200.0,
                       help="sample budget in units of N")

    p_check = sub.add_parser("check", help="run the verification suite")
    p_check.add_argument("--check-seed", type=int, default=0)
    p_check.add_argument("--trials", type=int, default=20_000)
    p_check.add_argument("--out", default=None, help="optional report CSV path")

    p_toy = sub.add_parser("toygen", help="emit synthetic problem files")
    _add_problem_flags(p_toy)
    p_toy.add_argument("--out", default="problem_data.csv")
    return parser


def cli_main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "run":
            algos = _parse_algos(args.algo)
            if len(algos) != 1:
                raise InputError("`run` takes exactly one algorithm; use `bench` for suites")
            return _bench(args, algos)
        if args.command == "bench":
            return _bench(args, _parse_algos(args.algo))
        if args.command == "phistar":
            return _phistar(args)
        if args.command == "check":
            return _check(args)
        if args.command == "toygen":
            return _toygen(args)
        raise InputError(f"unknown command {args.command!r}")
    except _UsageError:
        return 1
    except (InputError, ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except DivergenceError as exc:
        print(f"run aborted: {exc}", file=sys.stderr)
        return 2


def main():
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
