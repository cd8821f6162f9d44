"""Command-line front end.

Subcommands: ``prox``, ``gsvt``, ``complete``, ``bench-synthetic``,
``inpaint``, ``movielens``.  Every run resolves its full configuration
(defaults included), derives all randomness from the single ``--seed``
flag, and emits a manifest describing the run; re-running with the same
manifest reproduces the numeric outputs exactly (wall times aside).

Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .data import (
    SyntheticSpec,
    aggregate,
    gen_lowrank,
    load_image,
    load_matrix_csv,
    load_movielens,
    load_observations_csv,
    make_record,
    mask_uniform,
    nmae,
    psnr,
    rel_err,
    save_image,
    save_matrix_csv,
)
from .errors import DataFormatError, FixedPointDivergenceError, SolverDivergenceError
from .gsvt import gsvt
from .penalties import parse_penalty
from .scalar_prox import FixedPointConfig, prox
from .solvers import CompletionProblem, SolverConfig, convex_pg_solve, gpg_solve, irnn_solve

EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4

SOLVERS = {"gpg": gpg_solve, "irnn": irnn_solve, "convex": convex_pg_solve}
DEFAULT_PENALTY = "logarithm:lambda=1,gamma=1.5"


def _sha256(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _manifest(args, resolved, inputs=()):
    return {
        "subcommand": args.command,
        "config": resolved,
        "seed": getattr(args, "seed", None),
        "version": __version__,
        "inputs": {str(p): _sha256(p) for p in inputs},
    }


def _write_json(path, payload):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _add_solver_flags(
    sp,
    max_iters=500,
    target_ratio=1e-5,
    decay=0.9,
    continuation_tol=math.inf,
    lam0_basis="max|observed|",
):
    sp.add_argument("--solver", choices=sorted(SOLVERS), default="gpg")
    sp.add_argument("--penalty", default=DEFAULT_PENALTY, help="penalty spec string")
    sp.add_argument("--mu", type=float, default=1.1, help="proximal weight, must exceed 1")
    sp.add_argument("--lambda0", type=float, default=None, help="absolute initial lambda")
    sp.add_argument(
        "--lambda0-scale",
        type=float,
        default=0.9,
        help=f"initial lambda as a multiple of {lam0_basis} (when --lambda0 absent)",
    )
    sp.add_argument("--lambda-target", type=float, default=None, help="absolute final lambda")
    sp.add_argument(
        "--lambda-target-ratio",
        type=float,
        default=target_ratio,
        help="final lambda as a fraction of the initial one (when --lambda-target absent)",
    )
    sp.add_argument("--decay", type=float, default=decay, help="continuation multiplier")
    sp.add_argument("--max-iters", type=int, default=max_iters)
    sp.add_argument("--tol", type=float, default=1e-5, help="relative step tolerance")
    sp.add_argument(
        "--continuation-tol",
        type=float,
        default=continuation_tol,
        help="relative step below which lambda decays (inf: decay every iteration)",
    )


def _solver_config(args, observed, lam0_basis=None) -> SolverConfig:
    lam0 = args.lambda0
    if lam0 is None:
        basis = float(np.abs(observed).max()) if lam0_basis is None else lam0_basis
        lam0 = args.lambda0_scale * basis
    lam_t = args.lambda_target
    if lam_t is None:
        lam_t = args.lambda_target_ratio * lam0
    return SolverConfig(
        penalty=parse_penalty(args.penalty),
        lambda0=lam0,
        lambda_target=lam_t,
        mu=args.mu,
        decay=args.decay,
        max_iterations=args.max_iters,
        step_tolerance=args.tol,
        continuation_tolerance=args.continuation_tol,
    )


def _top_singular_value(problem: CompletionProblem) -> float:
    return float(np.linalg.svd(problem.observed_matrix(), compute_uv=False)[0])


def _config_dict(cfg: SolverConfig, args) -> dict:
    return {
        "solver": args.solver,
        "penalty": args.penalty,
        "mu": cfg.mu,
        "lambda0": cfg.lambda0,
        "lambda_target": cfg.lambda_target,
        "decay": cfg.decay,
        "max_iterations": cfg.max_iterations,
        "step_tolerance": cfg.step_tolerance,
        "continuation_tolerance": cfg.continuation_tolerance,
    }


def _write_trace(path, trace):
    with open(path, "w") as fh:
        for k in range(trace.iterations):
            rec = {
                "k": k,
                "lambda": trace.lam[k],
                "objective": trace.objective[k],
                "step_norm": trace.step_norm[k],
            }
            if trace.rel_err is not None:
                rec["rel_err"] = trace.rel_err[k]
            fh.write(json.dumps(rec) + "\n")


def cmd_prox(args) -> int:
    penalty = parse_penalty(args.penalty_spec)
    if args.b < 0:
        raise ValueError("b must be nonnegative")
    cfg = FixedPointConfig(
        tolerance=args.fp_tol, max_iterations=args.fp_max_iters, tie_tolerance=args.tie_tol
    )
    out = prox(penalty, args.b, cfg)
    payload = {
        "minimizer": out.minimizer,
        "stationary_candidate": out.stationary_candidate,
        "objective_at_zero": out.objective_at_zero,
        "objective_at_candidate": out.objective_at_candidate,
        "iterations": out.iterations,
        "tie": out.tie,
        "manifest": _manifest(
            args,
            {
                "penalty": args.penalty_spec,
                "b": args.b,
                "tolerance": args.fp_tol,
                "max_iterations": args.fp_max_iters,
                "tie_tolerance": args.tie_tol,
            },
        ),
    }
    json.dump(payload, sys.stdout, indent=2)
    sys.stdout.write("\n")
    return 0


def cmd_gsvt(args) -> int:
    penalty = parse_penalty(args.penalty_spec)
    matrix = load_matrix_csv(args.matrix)
    result = gsvt(penalty, matrix)
    out = _out_dir(args)
    save_matrix_csv(out / "thresholded.csv", result.x)
    _write_json(
        out / "gsvt.json",
        {
            "input_sigma": result.input_sigma.tolist(),
            "shrunk_sigma": result.shrunk_sigma.tolist(),
        },
    )
    _write_json(
        out / "manifest.json",
        _manifest(args, {"penalty": args.penalty_spec, "matrix": str(args.matrix)}, [args.matrix]),
    )
    return 0


def _parse_shape(text):
    try:
        m, n = (int(tok) for tok in text.lower().split("x"))
        return m, n
    except ValueError:
        raise ValueError(f"bad shape {text!r}, expected MxN") from None


def cmd_complete(args) -> int:
    if args.truth is None and args.shape is None:
        raise ValueError("need --truth or --shape to size the problem")
    truth = load_matrix_csv(args.truth) if args.truth is not None else None
    shape = truth.shape if truth is not None else _parse_shape(args.shape)
    problem = load_observations_csv(args.observations, shape)
    cfg = _solver_config(args, problem.observed)
    x, trace = SOLVERS[args.solver](problem, cfg, truth=truth)
    out = _out_dir(args)
    save_matrix_csv(out / "solution.csv", x)
    _write_trace(out / "trace.jsonl", trace)
    summary = {
        "iterations": trace.iterations,
        "converged": trace.converged,
        "final_objective": trace.objective[-1] if trace.objective else None,
    }
    if truth is not None:
        summary["rel_err"] = rel_err(x, truth)
    _write_json(out / "result.json", summary)
    inputs = [args.observations] + ([args.truth] if args.truth is not None else [])
    _write_json(out / "manifest.json", _manifest(args, _config_dict(cfg, args), inputs))
    return 0


def _bench_trial(solver_name, args, r, idx, master_seed):
    child = int(np.random.SeedSequence([master_seed, r, idx]).generate_state(1, np.uint64)[0])
    spec = SyntheticSpec(
        m=args.m,
        n=args.n,
        rank=r,
        observe_fraction=args.observe_fraction,
        noise_sigma=args.noise,
        seed=child,
    )
    truth, problem = gen_lowrank(spec)
    cfg = _solver_config(args, problem.observed)
    start = time.perf_counter()
    x, trace = SOLVERS[solver_name](problem, cfg)
    elapsed = time.perf_counter() - start
    return make_record(
        idx, rel_err(x, truth), trace.iterations, elapsed, threshold=args.success_threshold
    )


def cmd_bench_synthetic(args) -> int:
    ranks = [int(tok) for tok in args.ranks.split(",") if tok]
    solvers = [tok.strip() for tok in args.solvers.split(",") if tok.strip()]
    for name in solvers:
        if name not in SOLVERS:
            raise ValueError(f"unknown solver {name!r}")
    trials = [(s, r, i) for s in solvers for r in ranks for i in range(args.seeds)]
    if args.jobs > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            results = list(
                pool.map(lambda t: _bench_trial(t[0], args, t[1], t[2], args.seed), trials)
            )
    else:
        results = [_bench_trial(s, args, r, i, args.seed) for s, r, i in trials]

    out = _out_dir(args)
    with open(out / "records.csv", "w") as fh:
        fh.write("solver,r,seed,rel_err,success,iterations,wall_time\n")
        for (solver_name, r, _), rec in zip(trials, results):
            fh.write(
                f"{solver_name},{r},{rec.seed},{rec.rel_err:.10e},"
                f"{int(rec.success)},{rec.iterations},{rec.wall_time:.3f}\n"
            )
    aggregates = []
    for solver_name in solvers:
        for r in ranks:
            recs = [
                rec
                for (s, rr, _), rec in zip(trials, results)
                if s == solver_name and rr == r
            ]
            agg = aggregate(recs, threshold=args.success_threshold)
            aggregates.append(
                {
                    "solver": solver_name,
                    "r": r,
                    "fos": agg.fos,
                    "mean_rel_err": agg.mean_rel_err,
                }
            )
    _write_json(out / "aggregate.json", aggregates)
    resolved = {
        "m": args.m,
        "n": args.n,
        "ranks": ranks,
        "observe_fraction": args.observe_fraction,
        "noise": args.noise,
        "seeds": args.seeds,
        "solvers": solvers,
        "success_threshold": args.success_threshold,
        "penalty": args.penalty,
        "mu": args.mu,
        "lambda0": args.lambda0,
        "lambda0_scale": args.lambda0_scale,
        "lambda_target": args.lambda_target,
        "lambda_target_ratio": args.lambda_target_ratio,
        "decay": args.decay,
        "max_iterations": args.max_iters,
        "step_tolerance": args.tol,
        "continuation_tolerance": args.continuation_tol,
        "jobs": args.jobs,
    }
    _write_json(out / "manifest.json", _manifest(args, resolved))
    return 0


def cmd_inpaint(args) -> int:
    channels = load_image(args.image)
    n_channels, height, width = channels.shape
    observed_idx = mask_uniform((height, width), args.missing_fraction, args.seed)
    recovered = np.empty_like(channels)
    if args.missing_fraction == 0.0:
        # nothing to inpaint: the completion problem's solution is the data
        recovered[:] = channels
        cfg_dict = {"solver": args.solver, "penalty": args.penalty}
    else:
        cfg = None
        for c in range(n_channels):
            values = channels[c][observed_idx[:, 0], observed_idx[:, 1]]
            problem = CompletionProblem(
                shape=(height, width), omega=observed_idx, observed=values
            )
            # images carry a dominant mean component, so the continuation
            # starts at the spectral scale rather than the entry scale
            cfg = _solver_config(args, problem.observed, _top_singular_value(problem))
            x, _ = SOLVERS[args.solver](problem, cfg)
            recovered[c] = x
        cfg_dict = _config_dict(cfg, args)
    quantized = np.clip(np.rint(recovered), 0, 255)
    out = _out_dir(args)
    image_path = out / ("recovered.pgm" if n_channels == 1 else "recovered.ppm")
    save_image(image_path, quantized)
    metrics = {
        "psnr": psnr(channels, quantized),
        "rel_err": rel_err(quantized, channels),
        "missing_fraction": args.missing_fraction,
    }
    _write_json(out / "metrics.json", metrics)
    cfg_dict["missing_fraction"] = args.missing_fraction
    _write_json(out / "manifest.json", _manifest(args, cfg_dict, [args.image]))
    return 0


def cmd_movielens(args) -> int:
    train, (test_omega, test_values) = load_movielens(
        args.ratings, holdout_fraction=args.holdout, seed=args.seed
    )
    # nonnegative ratings have a dominant mean component; scale the
    # continuation from the spectrum, not the entry magnitudes
    cfg = _solver_config(args, train.observed, _top_singular_value(train))
    x, trace = SOLVERS[args.solver](train, cfg)
    result = {
        "shape": list(train.shape),
        "train_ratings": int(train.omega.shape[0]),
        "test_ratings": int(test_omega.shape[0]),
        "iterations": trace.iterations,
        "converged": trace.converged,
    }
    if test_omega.shape[0]:
        result["nmae"] = nmae(x, test_values, test_omega)
    else:
        result["train_nmae"] = nmae(x, train.observed, train.omega)
    out = _out_dir(args)
    _write_json(out / "nmae.json", result)
    cfg_dict = _config_dict(cfg, args)
    cfg_dict["holdout"] = args.holdout
    _write_json(out / "manifest.json", _manifest(args, cfg_dict, [args.ratings]))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="svtkit",
        description="Nonconvex singular value shrinkage and matrix completion toolkit",
    )
    parser.add_argument("--version", action="version", version=f"svtkit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("prox", help="scalar prox of a penalty at b")
    sp.add_argument("penalty_spec", help="e.g. logarithm:lambda=1,gamma=1.5")
    sp.add_argument("b", type=float)
    sp.add_argument("--fp-tol", type=float, default=1e-12)
    sp.add_argument("--fp-max-iters", type=int, default=10000)
    sp.add_argument("--tie-tol", type=float, default=1e-12)
    sp.set_defaults(func=cmd_prox)

    sp = sub.add_parser("gsvt", help="shrink the singular values of a CSV matrix")
    sp.add_argument("matrix", help="dense matrix CSV")
    sp.add_argument("penalty_spec")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_gsvt)

    sp = sub.add_parser("complete", help="matrix completion from observation triples")
    sp.add_argument("--observations", required=True, help="row,col,value CSV")
    sp.add_argument("--truth", default=None, help="ground-truth matrix CSV (optional)")
    sp.add_argument("--shape", default=None, help="MxN when no truth matrix is given")
    sp.add_argument("--out", required=True)
    sp.add_argument("--seed", type=int, default=0)
    _add_solver_flags(sp)
    sp.set_defaults(func=cmd_complete)

    sp = sub.add_parser("bench-synthetic", help="low-rank recovery benchmark")
    sp.add_argument("--m", type=int, default=150)
    sp.add_argument("--n", type=int, default=150)
    sp.add_argument("--ranks", default="20,28,33", help="comma-separated rank list")
    sp.add_argument("--observe-fraction", type=float, default=0.5)
    sp.add_argument("--noise", type=float, default=0.0)
    sp.add_argument("--seeds", type=int, default=20, help="trials per (solver, rank)")
    sp.add_argument("--solvers", default="gpg", help="comma-separated: gpg,irnn,convex")
    sp.add_argument("--success-threshold", type=float, default=1e-3)
    sp.add_argument("--seed", type=int, default=0, help="master seed")
    sp.add_argument("--jobs", type=int, default=1)
    sp.add_argument("--out", required=True)
    _add_solver_flags(sp)
    sp.set_defaults(func=cmd_bench_synthetic)

    sp = sub.add_parser("inpaint", help="recover missing pixels channel by channel")
    sp.add_argument("image", help="binary PPM (P6) or PGM (P5)")
    sp.add_argument("--missing-fraction", type=float, default=0.4)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", required=True)
    _add_solver_flags(
        sp,
        max_iters=1200,
        target_ratio=0.01,
        decay=0.95,
        continuation_tol=1e-3,
        lam0_basis="the top singular value of the zero-filled channel",
    )
    sp.set_defaults(func=cmd_inpaint)

    sp = sub.add_parser("movielens", help="rating prediction NMAE on a holdout split")
    sp.add_argument("ratings", help="tab-separated ratings file")
    sp.add_argument("--holdout", type=float, default=0.2)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", required=True)
    _add_solver_flags(
        sp,
        max_iters=200,
        target_ratio=0.01,
        decay=0.8,
        continuation_tol=1e-3,
        lam0_basis="the top singular value of the zero-filled ratings matrix",
    )
    sp.set_defaults(func=cmd_movielens)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DataFormatError as err:
        print(f"svtkit: data error: {err}", file=sys.stderr)
        return EXIT_DATA
    except OSError as err:
        print(f"svtkit: i/o error: {err}", file=sys.stderr)
        return EXIT_DATA
    except (FixedPointDivergenceError, SolverDivergenceError, np.linalg.LinAlgError) as err:
        print(f"svtkit: numerical failure: {err}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as err:
        print(f"svtkit: {err}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
