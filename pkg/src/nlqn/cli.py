"""Command-line interface: ``nlqn <subcommand> [flags]``.

Outputs go to ``--out``, which defaults to ``$NLQN_OUT`` or ``./results``.
Exit status is 0 on success, 1 when a verification fails and 2 on bad usage.
"""

import argparse
import os
import sys

import numpy as np

from . import experiments as E
from .objectives import REGISTRY, check_gradient, make_objective, rastrigin_model_objective, rcigar_model
from .optimizer import nlqn_run, preset, write_trace_csv

OUT_ENV = "NLQN_OUT"


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _nonneg_int(text):
    v = int(float(text))
    if v < 0 or v != float(text):
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {text}")
    return v


def _positive_float(text):
    v = float(text)
    if not (v > 0 and np.isfinite(v)):
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return v


def _shrink(text):
    v = float(text)
    if not 0 < v < 1:
        raise argparse.ArgumentTypeError(f"shrink factor must lie in (0, 1), got {text}")
    return v


def _common():
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=0, help="master seed (default: %(default)s)")
    p.add_argument(
        "--out",
        default=os.environ.get(OUT_ENV, "results"),
        help=f"output directory (default: ${OUT_ENV} or ./results, now %(default)s)",
    )
    p.add_argument("--jobs", type=_positive_int, default=1, help="worker processes (default: %(default)s)")
    return p


def build_parser():
    common = _common()
    parser = argparse.ArgumentParser(prog="nlqn", description="Non-local quasi-Newton optimization and experiments.")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("optimize", parents=[common], help="run NLQN on one objective and write its trace")
    p.add_argument("--func", required=True, help=f"objective: {', '.join(sorted(REGISTRY))}")
    p.add_argument("--dim", type=_positive_int, default=None, help="dimension (default: 50, or 2 for siam)")
    p.add_argument("--preset", choices=("benchmark", "siam"), default=None,
                   help="benchmark: sigma0=10, k=3n, shrink=1/2, budget=1e5; siam: sigma0=1, k=3, shrink=10/11, budget=3e4 "
                        "(default: siam for --func siam, else benchmark)")
    p.add_argument("--sigma0", type=_positive_float, default=None, help="initial scaling (default: from preset)")
    p.add_argument("--k", type=_positive_int, default=None, help="gradient samples per iteration (default: from preset)")
    p.add_argument("--budget", type=_nonneg_int, default=None, help="evaluation budget (default: from preset)")
    p.add_argument("--max-iter", type=_nonneg_int, default=None, help="iteration cap (default: none)")
    p.add_argument("--shrink", type=_shrink, default=None, help="scaling shrink factor (default: from preset)")
    p.add_argument("--halfwidth", type=_positive_float, default=None,
                   help="x0 ~ Unif([-h, h]^n) (default: 100 for siam, else 10)")
    p.add_argument("--literal-linesearch", action="store_true",
                   help="move to the best grid candidate even if it is worse than x_t")

    p = sub.add_parser("exp1", parents=[common], help="search-direction angles on the offset-free rcigar")
    p.add_argument("--trials", type=_positive_int, default=100, help="trials per (sigma0, U) cell (default: %(default)s)")
    p.add_argument("--dim", type=_positive_int, default=20, help="dimension (default: %(default)s)")
    p.add_argument("--k", type=_positive_int, default=30, help="gradient samples (default: %(default)s = 3n/2)")

    p = sub.add_parser("exp2", parents=[common], help="NLQN against restarted BFGS on levy, salomon, rcigar")
    p.add_argument("--runs", type=_positive_int, default=20, help="runs per algorithm and function (default: %(default)s)")
    p.add_argument("--budget", type=_nonneg_int, default=100_000, help="evaluations per run (default: %(default)s)")
    p.add_argument("--dim", type=_positive_int, default=50, help="dimension (default: %(default)s)")
    p.add_argument("--funcs", default=",".join(E.EXP2_FUNCTIONS), help="comma-separated objectives (default: %(default)s)")

    p = sub.add_parser("exp3", parents=[common], help="NLQN on SIAM problem 4")
    p.add_argument("--runs", type=_positive_int, default=20, help="independent runs (default: %(default)s)")
    p.add_argument("--budget", type=_nonneg_int, default=30_000, help="evaluations per run (default: %(default)s)")

    p = sub.add_parser("check-bound", parents=[common], help="residual bound on random Rastrigin models")
    p.add_argument("--models", type=_positive_int, default=20, help="random models (default: %(default)s)")
    p.add_argument("--samples", type=_positive_int, default=1_000_000, help="Monte-Carlo samples (default: %(default)s)")

    p = sub.add_parser("check-consistency", parents=[common], help="Hessian recovery at large sigma")
    p.add_argument("--seeds", type=_positive_int, default=20, help="fits per sigma (default: %(default)s)")
    p.add_argument("--dim", type=_positive_int, default=10, help="dimension (default: %(default)s)")
    p.add_argument("--k", type=_positive_int, default=500, help="samples per fit (default: %(default)s)")

    p = sub.add_parser("check-gradients", parents=[common], help="analytic against finite-difference gradients")
    p.add_argument("--trials", type=_positive_int, default=100, help="points per objective (default: %(default)s)")
    p.add_argument("--dim", type=_positive_int, default=10, help="dimension of the scalable objectives (default: %(default)s)")
    p.add_argument("--tol", type=_positive_float, default=1e-5, help="relative error threshold (default: %(default)s)")
    return parser


def _path(args, name):
    os.makedirs(args.out, exist_ok=True)
    return os.path.join(args.out, name)


def cmd_optimize(args, parser):
    if args.func not in REGISTRY:
        print(f"nlqn: unknown function {args.func!r}; available: {', '.join(sorted(REGISTRY))}", file=sys.stderr)
        return 2
    is_siam = args.func == "siam"
    if is_siam and args.dim not in (None, 2):
        parser.error("siam is two-dimensional")
    dim = 2 if is_siam else (args.dim or 50)
    if args.func.startswith("rcigar") and dim < 2:
        parser.error("rcigar needs --dim >= 2")
    name = args.preset or ("siam" if is_siam else "benchmark")
    if name == "siam" and dim != 2:
        parser.error("the siam preset is two-dimensional")
    overrides = {"seed": args.seed, "keep_incumbent": not args.literal_linesearch}
    for key, val in (("sigma0", args.sigma0), ("k", args.k), ("budget", args.budget),
                     ("max_iter", args.max_iter), ("shrink", args.shrink)):
        if val is not None:
            overrides[key] = val
    try:
        cfg = preset(name, dim, **overrides)
    except ValueError as exc:
        parser.error(str(exc))
    obj = make_objective(args.func, dim)
    half = args.halfwidth or (100.0 if is_siam else 10.0)
    rng = np.random.default_rng(args.seed)
    x0 = rng.uniform(-half, half, dim)
    res = nlqn_run(obj, x0, cfg, rng=rng)
    path = _path(args, f"optimize_{args.func}_n{dim}_seed{args.seed}.csv")
    write_trace_csv(res, path)
    print(f"{args.func} n={dim}: best f {res.best_f:.12g} after {res.evals} evaluations, {len(res.trace)} iterations")
    print(f"trace: {path}")
    return 0


def cmd_exp1(args, parser):
    recs = E.exp1_angles(args.seed, args.trials, n=args.dim, k=args.k, jobs=args.jobs)
    path = _path(args, "exp1_angles.csv")
    E.write_exp1(recs, path)
    print("median angle (rad) per cell")
    print(f"{'sigma0':>8} {'U':>8} " + " ".join(f"{e:>10}" for e in E.ESTIMATORS))
    for s in E.SCALE_GRID:
        for u in E.SCALE_GRID:
            meds = [np.median(E.angles_by(recs, s, u, e)) for e in E.ESTIMATORS]
            print(f"{s:8g} {u:8g} " + " ".join(f"{m:10.4f}" for m in meds))
    print(f"records: {path}")
    return 0


def cmd_exp2(args, parser):
    funcs = tuple(f.strip() for f in args.funcs.split(",") if f.strip())
    unknown = [f for f in funcs if f not in REGISTRY or f == "siam"]
    if unknown or not funcs:
        print(f"nlqn: unknown or unsupported function(s) {unknown}; available: levy, rcigar, rcigar-noff, salomon", file=sys.stderr)
        return 2
    res = E.exp2_benchmark(args.seed, args.runs, args.budget, funcs=funcs, n=args.dim, jobs=args.jobs)
    path = _path(args, "exp2_traces.csv")
    E.write_exp2(res, path)
    print("median final best f")
    for (algo, func), m in res.medians().items():
        print(f"{algo:>6} {func:>12} {m:.6g}")
    print(f"traces: {path}")
    return 0


def cmd_exp3(args, parser):
    res = E.exp3_siam(args.seed, args.runs, args.budget, jobs=args.jobs)
    path = _path(args, "exp3_traces.csv")
    summary = _path(args, "exp3_summary.csv")
    E.write_exp3(res, path, summary)
    print(f"success fraction {res.success_fraction:.3f} ({int(sum(res.success))}/{len(res.success)} runs)")
    print(f"traces: {path}\nsummary: {summary}")
    return 0


def cmd_check_bound(args, parser):
    suite = E.bound_suite(args.seed, args.models, samples=args.samples)
    path = _path(args, "bound_check.csv")
    E.write_bound(suite, path)
    violations = [(i, r) for i, _, recs in suite for r in recs if not r.holds]
    disagreements = [(i, r) for i, _, recs in suite for r in recs if not r.mc_agrees]
    for i, r in violations:
        print(f"bound violated: model {i} sigma {r.sigma:g} exact {r.exact:.6g} > bound {r.bound:.6g}")
    for i, r in disagreements:
        print(f"Monte-Carlo mismatch: model {i} sigma {r.sigma:g} |mc - exact| > 5 stderr")
    total = sum(len(recs) for _, _, recs in suite)
    print(f"{total - len(violations)}/{total} bound checks hold, {total - len(disagreements)}/{total} Monte-Carlo checks agree")
    print(f"records: {path}")
    return 1 if violations or disagreements else 0


def cmd_check_consistency(args, parser):
    rep = E.consistency_check(args.seed, seeds=args.seeds, n=args.dim, k=args.k, jobs=args.jobs)
    path = _path(args, "consistency.csv")
    E.write_consistency(rep, path)
    for s, m in rep.medians.items():
        print(f"sigma {s:8g}: median relative Hessian error {m:.6g}")
    print("ordering holds" if rep.ordered else "ordering FAILS")
    return 0 if rep.ordered else 1


def cmd_check_gradients(args, parser):
    objs = [make_objective(name, args.dim) for name in sorted(REGISTRY)]
    objs.append(rastrigin_model_objective(rcigar_model(args.dim), name="rcigar-model"))
    failed = False
    for obj in objs:
        rep = check_gradient(obj, args.trials, args.seed)
        ok = rep.passes(args.tol)
        failed |= not ok
        print(f"{obj.name:>14} n={obj.dim:<3} max rel error {rep.max_rel_error:.3e} {'ok' if ok else 'FAIL'}")
    return 1 if failed else 0


COMMANDS = {
    "optimize": cmd_optimize,
    "exp1": cmd_exp1,
    "exp2": cmd_exp2,
    "exp3": cmd_exp3,
    "check-bound": cmd_check_bound,
    "check-consistency": cmd_check_consistency,
    "check-gradients": cmd_check_gradients,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    return COMMANDS[args.command](args, parser)


if __name__ == "__main__":
    sys.exit(main())
