"""Command-line front end: bench, certify, solve, params.

Exit codes: 0 on success (a completed certification that reports "violated"
is a success), 1 on usage or config errors, 2 on numerical failures.
"""

import argparse
import json
import os
import sys

import numpy as np

from .bench import emit_csv, emit_summary_json, parse_config, run_experiment
from .errors import ConfigError, NumericalError
from .geometry import BregmanGenerator
from .growth import (GrowthModuli, certify_qfg, certify_qgg,
                     compute_growth_moduli)
from .problems import (StructuredProblem, example1_fixture, kkt_solution_set,
                       load_problem)
from .solver import (GdaSteps, StopRule, default_gda_step, derive_params,
                     run, stepsize_condition_check)


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise _UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="sella",
                     description="Saddle-point solver benchmark and growth "
                                 "certification toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    b = sub.add_parser("bench", help="run a benchmark config")
    b.add_argument("--config", required=True, help="experiment config (JSON)")
    b.add_argument("--out", default=None,
                   help="output directory (falls back to the config's 'out')")
    b.add_argument("--full", action="store_true",
                   help="include dims beyond the desk limit")

    c = sub.add_parser("certify", help="sampled growth-condition check")
    c.add_argument("--problem", required=True)
    c.add_argument("--condition", required=True, choices=["qgg", "qfg"])
    c.add_argument("--samples", type=int, default=500)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--mu-x", type=float, default=None)
    c.add_argument("--mu-y", type=float, default=None)
    c.add_argument("--points", default=None,
                   help="JSON file with forced sample points")
    c.add_argument("--out", default=None, help="write the report as JSON")

    s = sub.add_parser("solve", help="run one method on one problem")
    s.add_argument("--problem", required=True)
    s.add_argument("--method", required=True, choices=["gda", "gapd"])
    s.add_argument("--theta", type=float, default=1.0)
    s.add_argument("--condition", default="auto", choices=["qfg", "qgg", "auto"])
    s.add_argument("--max-iters", type=int, default=100000)
    s.add_argument("--rel-tol", type=float, default=1e-8)
    s.add_argument("--tail", type=int, default=10)

    p = sub.add_parser("params", help="derive and verify a schedule")
    p.add_argument("--problem", required=True)
    p.add_argument("--theta", type=float, required=True)
    p.add_argument("--condition", default="auto", choices=["qfg", "qgg", "auto"])
    return parser


def _load(path):
    if not os.path.exists(path):
        raise ConfigError(f"problem file not found: {path}")
    problem, moduli_meta = load_problem(path)
    return problem, moduli_meta


def _solution_set(problem):
    if problem.name == "example1":
        return example1_fixture()[1]
    if isinstance(problem, StructuredProblem):
        return kkt_solution_set(problem)
    raise NumericalError(f"no solution-set oracle for problem {problem.name!r}")


def _moduli_for(problem, moduli_meta, mu_x=None, mu_y=None, solset=None):
    if mu_x is not None or mu_y is not None:
        if mu_x is None or mu_y is None:
            raise ConfigError("provide both --mu-x and --mu-y")
        return GrowthModuli(mu_x, mu_y, "both")
    if moduli_meta:
        return GrowthModuli(float(moduli_meta["mu_x"]),
                            float(moduli_meta["mu_y"]),
                            moduli_meta.get("condition", "both"))
    if isinstance(problem, StructuredProblem):
        return compute_growth_moduli(problem, solset)[0]
    raise ConfigError("problem file carries no moduli and the growth pipeline "
                      "needs a structured instance; pass --mu-x/--mu-y")


def _cmd_bench(args) -> int:
    try:
        with open(args.config, "r", encoding="utf-8") as fh:
            cfg = parse_config(fh.read())
    except OSError as e:
        raise ConfigError(f"cannot read config: {e}")
    out_dir = args.out or cfg.out
    if not out_dir:
        raise ConfigError("no output directory: pass --out or set 'out' in "
                          "the config")
    os.makedirs(out_dir, exist_ok=True)
    rows, summary = run_experiment(cfg, full=args.full)
    csv_path = os.path.join(out_dir, "results.csv")
    json_path = os.path.join(out_dir, "summary.json")
    emit_csv(rows, csv_path)
    emit_summary_json(summary, json_path)
    n_err = sum(1 for c in summary["cells"] if c["status"] != "ok")
    print(f"wrote {len(rows)} rows to {csv_path}")
    print(f"wrote summary to {json_path} "
          f"({len(summary['cells'])} cells, {n_err} errors)")
    return 0


def _cmd_certify(args) -> int:
    problem, moduli_meta = _load(args.problem)
    solset = _solution_set(problem)
    moduli = _moduli_for(problem, moduli_meta, args.mu_x, args.mu_y, solset)
    extra = None
    if args.points:
        with open(args.points, "r", encoding="utf-8") as fh:
            pts = json.load(fh)
        if not isinstance(pts, list):
            raise ConfigError("points file must hold a JSON list of vectors")
        extra = [np.asarray(p, dtype=float) for p in pts]
    fn = certify_qgg if args.condition == "qgg" else certify_qfg
    report = fn(problem, solset, moduli, samples=args.samples, seed=args.seed,
                extra_points=extra)
    verdict = "certified (no violation found)" if report.passed else "violated"
    print(f"condition: {report.condition}")
    print(f"moduli: mu_x={report.mu_x:g} mu_y={report.mu_y:g}")
    print(f"samples: {report.samples}  min margin: {report.min_margin:.6e}")
    print(f"result: {verdict} ({report.n_violations} violating samples)")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(report.to_json() + "\n")
    return 0


def _solve_method(args, problem, moduli_meta):
    if args.method == "gda":
        step = default_gda_step(problem.smoothness)
        return GdaSteps(step, step)
    solset = None
    if not moduli_meta and isinstance(problem, StructuredProblem):
        solset = _solution_set(problem)
    moduli = _moduli_for(problem, moduli_meta, solset=solset)
    return derive_params(problem.smoothness, moduli, args.theta,
                         condition=args.condition)


def _cmd_solve(args) -> int:
    problem, moduli_meta = _load(args.problem)
    method = _solve_method(args, problem, moduli_meta)
    try:
        solset = _solution_set(problem)
    except NumericalError:
        solset = None
    euclid = BregmanGenerator.euclidean()
    z0 = np.zeros(problem.dim_x + problem.dim_y)
    trace = run(problem, euclid, euclid, method, z0,
                StopRule(args.max_iters, args.rel_tol), monitor=solset)
    rel = trace.rel_residuals()
    print(f"method: {trace.method}"
          + (f" theta={trace.theta:g}" if trace.theta is not None else ""))
    print(f"iterations: {trace.ks[-1]}  final relative residual: {rel[-1]:.3e}")
    print("k,residual_rel,dist_sq,lyapunov")
    for i in range(max(0, len(trace.ks) - args.tail), len(trace.ks)):
        ds = "" if not np.isfinite(trace.dist_sq[i]) else f"{trace.dist_sq[i]:.6e}"
        ly = "" if not np.isfinite(trace.lyapunov[i]) else f"{trace.lyapunov[i]:.6e}"
        print(f"{trace.ks[i]},{rel[i]:.6e},{ds},{ly}")
    return 0


def _cmd_params(args) -> int:
    problem, moduli_meta = _load(args.problem)
    solset = None
    if not moduli_meta and isinstance(problem, StructuredProblem):
        solset = _solution_set(problem)
    moduli = _moduli_for(problem, moduli_meta, solset=solset)
    params = derive_params(problem.smoothness, moduli, args.theta,
                           condition=args.condition)
    report = stepsize_condition_check(params, problem.smoothness, moduli)
    print(f"condition: {params.condition} (varsigma={params.varsigma:g})")
    print(f"alpha={params.alpha!r}")
    print(f"beta={params.beta!r}")
    print(f"tau={params.tau!r}")
    print(f"sigma={params.sigma!r}")
    print(f"gamma_x={params.gamma_x!r} gamma_y={params.gamma_y!r}")
    print(f"coupling identity: residual={report.coupling_residual:.3e} "
          f"ok={report.ok_coupling}")
    print(f"step bounds vs moduli: margins=({report.step_bound_margin_x:.3e}, "
          f"{report.step_bound_margin_y:.3e}) ok={report.ok_step_bounds}")
    print(f"weight conditions: C_x={report.c_x:.3e} C_y={report.c_y:.3e}")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "bench":
            return _cmd_bench(args)
        if args.command == "certify":
            return _cmd_certify(args)
        if args.command == "solve":
            return _cmd_solve(args)
        return _cmd_params(args)
    except _UsageError:
        return 1
    except ConfigError as e:
        print(f"sella: config error: {e}", file=sys.stderr)
        return 1
    except NumericalError as e:
        print(f"sella: numerical failure: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
