"""Command line interface: ``bliss {simulate,solve,certify,sweep,score}``."""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

from . import io
from .certificate import check_persistent_scattering, normalize_pair
from .evaluation import PRESETS, emit_results, run_sweep, score_recovery
from .lti import make_instance, persistency_rank
from .numkit import RankError
from .solver import DivergenceError, SolverConfig, oracle_rho0, reduce, solve

logger = logging.getLogger("bliss")


def _cmd_simulate(args):
    system, data = make_instance(
        args.n, args.m, args.T, args.s, args.dist, args.seed, args.rho_spec, args.scale
    )
    pe = persistency_rank(data.X, data.U_true)
    data.meta["persistency_rank"] = pe.rank
    data.meta["persistently_exciting"] = pe.persistently_exciting
    data.meta["rank_threshold"] = pe.threshold
    io.save_trajectory(args.out, data, system)
    print(f"wrote trajectory (n={args.n}, m={args.m}, T={args.T}, s={args.s}) to {args.out}")
    return 0


def _parse_rho0(value):
    if value in (None, "auto", "oracle"):
        return value
    return float(value)


def _cmd_solve(args):
    data, system = io.load_trajectory(args.data)
    oracle_A = io.read_matrix(args.oracle_a) if args.oracle_a else None
    red = reduce(data, args.m, oracle_A)
    rho0 = _parse_rho0(args.rho0)
    T = data.T
    radius = args.radius if args.radius is not None else args.mu * T
    if rho0 == "oracle":
        if system is None or data.U_true is None:
            print("error: --rho0 oracle needs B.csv and U_true.csv in the data directory", file=sys.stderr)
            return 2
        rho0 = oracle_rho0(red, system.B, data.U_true, radius)
    elif rho0 == "auto":
        rho0 = None
    cfg = SolverConfig(
        radius=radius,
        rho0=rho0,
        alpha=args.alpha,
        tau=args.tau,
        fixed_phase=args.fixed_phase,
        max_iters=args.max_iters,
        tol=args.tol,
        oracle_A=oracle_A,
    )
    try:
        rep = solve(data, args.m, cfg, red=red)
    except DivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    config = {k: v for k, v in dataclasses.asdict(cfg).items() if k != "oracle_A"}
    config["oracle_a"] = args.oracle_a
    config["data"] = str(args.data)
    config["m"] = args.m
    io.save_solve(args.out, rep, config)
    print(
        f"converged={rep.converged} iterations={rep.iterations} "
        f"primal={rep.primal_res:.3g} dual={rep.dual_res:.3g} -> {args.out}"
    )
    return 0


def _cmd_certify(args):
    data, _ = io.load_trajectory(args.data)
    if data.U_true is None:
        print("error: certify needs U_true.csv in the data directory", file=sys.stderr)
        return 2
    pair = normalize_pair(data.X, data.U_true)
    rep = check_persistent_scattering(pair, args.samples, args.seed, args.tol)
    out = rep.to_dict()
    out["seed"] = args.seed
    out["data"] = str(args.data)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    io.write_json(args.out, out)
    print(f"{rep.overall}: C1 margin {rep.c1_min_margin:.3g}, C2 gap {rep.c2_sparse_gap:.3g} -> {args.out}")
    return 0


def _cmd_sweep(args):
    base = PRESETS[args.preset]
    changes = {"distribution": args.dist, "mode": args.mode}
    if args.trials is not None:
        changes["trials"] = args.trials
    if args.seed is not None:
        changes["base_seed"] = args.seed
    if args.rho0 is not None:
        changes["rho0"] = _parse_rho0(args.rho0)
    base = dataclasses.replace(base, **changes)
    result = run_sweep(base, jobs=args.jobs)
    result.config["preset"] = args.preset
    emit_results(result, args.out, svg=not args.no_svg)
    print(f"wrote sweep ({len(result.cells)} cells) to {args.out}")
    return 0


def _cmd_score(args):
    rdir, tdir = Path(args.report), Path(args.truth)
    report = io.read_json(rdir / "report.json")
    data, system = io.load_trajectory(tdir)
    if system is None or data.U_true is None:
        print("error: truth directory lacks A.csv, B.csv or U_true.csv", file=sys.stderr)
        return 2
    sc = score_recovery(
        io.read_matrix(rdir / "A_star.csv").reshape(system.n, system.n),
        io.read_matrix(rdir / "B_star.csv").reshape(system.n, -1),
        io.read_matrix(rdir / "U_star.csv").reshape(data.T, -1),
        system.A,
        system.B,
        data.U_true,
        report.get("radius", 1.0),
    )
    out = sc.to_dict()
    io.write_json(rdir / "score.json", out)
    print(json.dumps(out, indent=2))
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="bliss", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="generate a system and a sparse-input trajectory")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--m", type=int, required=True)
    s.add_argument("--T", type=int, required=True)
    s.add_argument("--s", type=int, required=True)
    s.add_argument("--dist", choices=("gaussian", "laplace"), default="gaussian")
    s.add_argument("--rho-spec", type=float, default=0.9, help="spectral radius of A")
    s.add_argument("--scale", type=float, default=1.0, help="scale of nonzero inputs")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=_cmd_simulate)

    s = sub.add_parser("solve", help="identify (A, B, U) from a trajectory directory")
    s.add_argument("--data", required=True)
    s.add_argument("--m", type=int, required=True)
    s.add_argument("--oracle-a", default=None, help="CSV with the known A (dictionary learning mode)")
    s.add_argument("--radius", type=float, default=None, help="l1 budget per input column (default mu*T)")
    s.add_argument("--mu", type=float, default=1.0)
    s.add_argument("--rho0", default="auto", help="number, 'oracle' or 'auto'")
    s.add_argument("--alpha", type=float, default=1.2)
    s.add_argument("--tau", type=float, default=2.0)
    s.add_argument("--fixed-phase", type=int, default=200)
    s.add_argument("--max-iters", type=int, default=3000)
    s.add_argument("--tol", type=float, default=1e-6)
    s.add_argument("--out", required=True)
    s.set_defaults(func=_cmd_solve)

    s = sub.add_parser("certify", help="check the persistent-scattering conditions")
    s.add_argument("--data", required=True)
    s.add_argument("--samples", type=int, default=1000)
    s.add_argument("--tol", type=float, default=1e-6)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=_cmd_certify)

    s = sub.add_parser("sweep", help="success-probability sweep over (s, T)")
    s.add_argument("--preset", choices=sorted(PRESETS), default="desk")
    s.add_argument("--mode", choices=("blind", "oracle"), default="blind")
    s.add_argument("--dist", choices=("gaussian", "laplace"), default="gaussian")
    s.add_argument("--trials", type=int, default=None)
    s.add_argument("--jobs", type=int, default=1)
    s.add_argument("--seed", type=int, default=None, help="base seed")
    s.add_argument("--rho0", default=None, help="number, 'oracle' or 'auto'")
    s.add_argument("--no-svg", action="store_true")
    s.add_argument("--out", required=True)
    s.set_defaults(func=_cmd_sweep)

    s = sub.add_parser("score", help="score a solve directory against ground truth")
    s.add_argument("--report", required=True)
    s.add_argument("--truth", required=True)
    s.set_defaults(func=_cmd_score)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except (RankError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
