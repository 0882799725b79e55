"""Command line front end: decompose a CSV matrix, run the simulation
study, or run the timing benchmark.

Exit codes: 0 success, 2 invalid arguments or malformed input, 3 solver
degeneracy. Anticipated errors print a one-line message on standard
error. The environment variable RSVD_SEED supplies a fallback seed when
--seed is not given.
"""
import argparse
import json
import os
import sys

import numpy as np

from .bench import bench_to_csv, run_timing_bench
from .decomposition import fit_svd
from .errors import NonFiniteInput, RankTooLarge
from .rank1 import SolverOptions
from .sim import (DEFAULT_REPLICATES, FULL_REPLICATES, SimConfig,
                  format_table, report_to_csv, run_simulation)


def _fail(msg, code):
    print(f"dpdsvd: error: {msg}", file=sys.stderr)
    return code


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def _float_list(text):
    try:
        items = tuple(float(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated float list: {text!r}")
    if not items:
        raise argparse.ArgumentTypeError("empty list")
    return items


def _int_list(text):
    try:
        items = tuple(int(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated integer list: {text!r}")
    if not items:
        raise argparse.ArgumentTypeError("empty list")
    return items


def _env_seed():
    raw = os.environ.get("RSVD_SEED")
    if raw is None:
        return None
    try:
        return int(raw)
    except ValueError:
        return None


def _solver_options(args):
    seed = args.seed if args.seed is not None else _env_seed()
    return SolverOptions(alpha=args.alpha, tol=args.tol,
                         max_iter=args.max_iter, eps_sigma=args.eps_sigma,
                         init=args.init, seed=seed)


def _float_cell(x):
    return repr(float(x))


def _decomposition_json(dec):
    payload = {
        "lambdas": [float(x) for x in dec.lambdas],
        "u": [[float(x) for x in row] for row in dec.U],
        "v": [[float(x) for x in row] for row in dec.V],
        "sigma2": [float(x) for x in dec.sigma2s],
        "diagnostics": [
            {"layer": k, "iterations": d.iterations,
             "converged": bool(d.converged),
             "trace": [float(x) for x in d.trace]}
            for k, d in enumerate(dec.diagnostics)],
    }
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def _decomposition_csv(dec):
    lines = ["# lambdas", ",".join(_float_cell(x) for x in dec.lambdas)]
    lines.append("# U")
    lines += [",".join(_float_cell(x) for x in row) for row in dec.U]
    lines.append("# V")
    lines += [",".join(_float_cell(x) for x in row) for row in dec.V]
    lines.append("# sigma2")
    lines.append(",".join(_float_cell(x) for x in dec.sigma2s))
    lines.append("# diagnostics")
    lines.append("layer,iterations,converged")
    lines += [f"{k},{d.iterations},{d.converged}"
              for k, d in enumerate(dec.diagnostics)]
    return "\n".join(lines) + "\n"


def cmd_decompose(args):
    try:
        X = np.loadtxt(args.input, delimiter=",",
                       skiprows=1 if args.header else 0, ndmin=2)
    except OSError as exc:
        return _fail(f"cannot read {args.input}: {exc}", 2)
    except ValueError as exc:
        return _fail(f"malformed CSV in {args.input}: {exc}", 2)
    try:
        opts = _solver_options(args)
        dec = fit_svd(X, args.rank, opts)
    except (RankTooLarge, NonFiniteInput) as exc:
        return _fail(str(exc), 2)
    except FloatingPointError as exc:
        return _fail(f"solver degeneracy: {exc}", 3)
    except ValueError as exc:
        return _fail(str(exc), 2)
    text = (_decomposition_json(dec) if args.format == "json"
            else _decomposition_csv(dec))
    with open(args.output, "w", encoding="utf-8") as fh:
        fh.write(text)
    return 0


def cmd_simulate(args):
    seed = args.seed if args.seed is not None else _env_seed()
    if seed is None:
        seed = 42
    replicates = FULL_REPLICATES if args.full_scale else (
        args.replicates if args.replicates is not None else DEFAULT_REPLICATES)
    try:
        cfg = SimConfig(setup=args.setup, replicates=replicates,
                        alphas=args.alphas, seed=seed)
    except ValueError as exc:
        return _fail(str(exc), 2)
    report = run_simulation(cfg, threads=args.threads)
    with open(args.output, "w", encoding="utf-8") as fh:
        fh.write(report_to_csv(report))
    sys.stdout.write(format_table(report))
    return 0


def cmd_bench(args):
    try:
        result = run_timing_bench(args.rows, args.cols, args.alphas,
                                  reps=args.reps)
    except ValueError as exc:
        return _fail(str(exc), 2)
    sys.stdout.write(bench_to_csv(result))
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="dpdsvd",
        description="Robust singular value decomposition by minimum "
                    "density power divergence.")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    dec = sub.add_parser("decompose", help="decompose a CSV matrix")
    dec.add_argument("--input", required=True, help="numeric CSV matrix")
    dec.add_argument("--output", required=True, help="output file path")
    dec.add_argument("--rank", type=_positive_int, required=True)
    dec.add_argument("--alpha", type=float, default=0.0)
    dec.add_argument("--tol", type=float, default=1e-8)
    dec.add_argument("--max-iter", type=_positive_int, default=100)
    dec.add_argument("--eps-sigma", type=float, default=None)
    dec.add_argument("--init", default="screened",
                     choices=("screened", "classical", "random"))
    dec.add_argument("--seed", type=int, default=None)
    dec.add_argument("--format", default="json", choices=("csv", "json"))
    dec.add_argument("--header", action="store_true",
                     help="skip the first CSV row")
    dec.set_defaults(func=cmd_decompose)

    sim = sub.add_parser("simulate", help="run the Monte Carlo study")
    sim.add_argument("--setup", required=True,
                     help="one of S1, S2a, S2b, S2c, S3, S4, S5")
    scale = sim.add_mutually_exclusive_group()
    scale.add_argument("--replicates", type=_positive_int, default=None)
    scale.add_argument("--full-scale", action="store_true",
                       help=f"full-scale run with {FULL_REPLICATES} replicates")
    sim.add_argument("--alphas", type=_float_list, default=(0.1, 0.5, 1.0))
    sim.add_argument("--seed", type=int, default=None)
    sim.add_argument("--output", default="sim_report.csv")
    sim.add_argument("--threads", type=_positive_int, default=1)
    sim.set_defaults(func=cmd_simulate)

    ben = sub.add_parser("bench", help="run the timing benchmark")
    ben.add_argument("--rows", type=_int_list, default=(50, 250, 1000))
    ben.add_argument("--cols", type=_positive_int, default=25)
    ben.add_argument("--alphas", type=_float_list, default=(0.1, 1.0))
    ben.add_argument("--reps", type=_positive_int, default=3)
    ben.set_defaults(func=cmd_bench)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    return args.func(args)
