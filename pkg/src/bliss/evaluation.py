"""Recovery scoring and phase-transition sweeps."""

from __future__ import annotations

import csv
import io
import json
import logging
import os
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .lti import make_instance
from .solver import DivergenceError, SolverConfig, oracle_rho0, reduce, solve
from .numkit import RankError

logger = logging.getLogger(__name__)

__all__ = [
    "SUCCESS_THRESHOLD",
    "RecoveryReport",
    "SweepConfig",
    "CellResult",
    "SweepResult",
    "PRESETS",
    "normalize_gauge",
    "match_columns",
    "score_recovery",
    "trial_seed",
    "run_trial",
    "run_sweep",
    "emit_results",
    "sweep_csv",
    "heatmap_svg",
    "TrialResult",
]

SUCCESS_THRESHOLD = 0.01


@dataclass
class RecoveryReport:
    permutation: np.ndarray
    signs: np.ndarray
    rel_err_A: float
    rel_err_B: float
    rel_err_U: float
    success: bool

    @property
    def max_error(self):
        return max(self.rel_err_A, self.rel_err_B, self.rel_err_U)

    def to_dict(self):
        return {
            "permutation": [int(p) for p in self.permutation],
            "signs": [int(s) for s in self.signs],
            "rel_err_A": float(self.rel_err_A),
            "rel_err_B": float(self.rel_err_B),
            "rel_err_U": float(self.rel_err_U),
            "success": bool(self.success),
        }


def normalize_gauge(B, U, radius: float = 1.0):
    """Scale each column of ``U`` to l1 norm ``radius`` and the matching
    column of ``B`` reciprocally. Zero columns are left as they are.
    """
    B = np.asarray(B, dtype=float)
    U = np.asarray(U, dtype=float)
    norms = np.abs(U).sum(axis=0)
    d = np.where(norms > 0, radius / np.where(norms > 0, norms, 1.0), 1.0)
    return B / d, U * d


def match_columns(U_est, U_ref):
    """Assign estimated columns to reference columns.

    Returns ``(perm, signs, C)`` where ``U_est[:, perm] * signs`` lines up with
    ``U_ref`` and ``C`` is the matrix of cosine similarities
    ``C[i, j] = <U_est_i, U_ref_j> / (||U_est_i|| ||U_ref_j||)``.
    The permutation maximizes the total absolute similarity.
    """
    ne = np.linalg.norm(U_est, axis=0)
    nr = np.linalg.norm(U_ref, axis=0)
    G = U_est.T @ U_ref
    with np.errstate(invalid="ignore", divide="ignore"):
        C = G / np.outer(ne, nr)
    C[~np.isfinite(C)] = 0.0
    rows, cols = linear_sum_assignment(np.abs(C), maximize=True)
    perm = np.empty(U_ref.shape[1], dtype=int)
    perm[cols] = rows
    signs = np.sign(C[perm, np.arange(U_ref.shape[1])])
    signs[signs == 0] = 1.0
    return perm, signs.astype(int), C


def _rel(a, b):
    nb = np.linalg.norm(b)
    return float(np.linalg.norm(a - b) / nb) if nb > 0 else float(np.linalg.norm(a))


def score_recovery(A_star, B_star, U_star, A_true, B_true, U_true, radius: float = 1.0):
    """Compare an estimate with the ground truth up to scaling and permutation.

    Both pairs are brought to the gauge where every input column has l1 norm
    ``radius``; columns are matched by linear assignment on absolute
    correlations and signs fixed by the sign of the matched correlation.
    Recovery succeeds when the largest of the three relative Frobenius
    errors is at most 0.01.
    """
    Bs, Us = normalize_gauge(B_star, U_star, radius)
    Bt, Ut = normalize_gauge(B_true, U_true, radius)
    perm, signs, _ = match_columns(Us, Ut)
    Bp = Bs[:, perm] * signs
    Up = Us[:, perm] * signs
    eA = _rel(np.asarray(A_star, dtype=float), np.asarray(A_true, dtype=float))
    eB = _rel(Bp, Bt)
    eU = _rel(Up, Ut)
    degenerate = bool(np.any(np.abs(Us).sum(axis=0) == 0))
    ok = (not degenerate) and max(eA, eB, eU) <= SUCCESS_THRESHOLD
    return RecoveryReport(perm, signs, eA, eB, eU, ok)


@dataclass(frozen=True)
class SweepConfig:
    """Generation and solver settings shared by every trial of a sweep.

    ``rho0`` is ``"oracle"`` (:func:`bliss.solver.oracle_rho0`, computed from
    the true ``B``), ``"auto"`` (the data-only fallback) or a number.
    """

    n: int = 20
    m: int = 5
    s_values: tuple = (1, 2, 3, 4, 5)
    T_values: tuple = (100, 250, 500)
    trials: int = 20
    mode: str = "blind"
    distribution: str = "gaussian"
    spectral_radius: float = 0.9
    input_scale: float = 1.0
    rho0: object = "oracle"
    mu: float = 1.0
    alpha: float = 1.2
    tau: float = 2.0
    fixed_phase: int = 200
    max_iters: int = 3000
    tol: float = 1e-6
    base_seed: int = 0

    def to_dict(self):
        d = asdict(self)
        d["s_values"] = list(self.s_values)
        d["T_values"] = list(self.T_values)
        return d


PRESETS = {
    "paper": SweepConfig(
        n=100,
        m=25,
        s_values=tuple(range(1, 26)),
        T_values=tuple(range(200, 2001, 200)),
        trials=50,
    ),
    "desk": SweepConfig(),
}


@dataclass
class TrialResult:
    s: int
    T: int
    k: int
    seed: int
    mode: str
    success: bool
    converged: bool
    iterations: int
    primal_res: float
    dual_res: float
    max_error: float
    error: str = ""


@dataclass
class CellResult:
    s: int
    T: int
    mode: str
    trials: int
    successes: int
    mean_iters: float
    mean_primal_res: float
    mean_dual_res: float

    @property
    def p_success(self):
        return self.successes / self.trials if self.trials else 0.0


@dataclass
class SweepResult:
    mode: str
    s_values: list
    T_values: list
    cells: dict
    trial_results: list = field(default_factory=list)
    config: dict = field(default_factory=dict)

    def cell(self, s, T) -> CellResult:
        return self.cells[(s, T)]


def trial_seed(base_seed: int, s: int, T: int, k: int) -> int:
    """Seed of trial ``k`` in cell ``(s, T)``; independent of the mode."""
    return int(np.random.SeedSequence([base_seed, s, T, k]).generate_state(1)[0])


def _solver_config(cfg: SweepConfig, red, system, data, oracle_A):
    if cfg.rho0 == "oracle":
        rho0 = oracle_rho0(red, system.B, data.U_true, cfg.mu * data.T)
    elif cfg.rho0 == "auto":
        rho0 = None
    else:
        rho0 = float(cfg.rho0)
    return SolverConfig(
        mu=cfg.mu,
        rho0=rho0,
        fixed_phase=cfg.fixed_phase,
        alpha=cfg.alpha,
        tau=cfg.tau,
        max_iters=cfg.max_iters,
        tol=cfg.tol,
        oracle_A=oracle_A,
    )


def run_trial(cfg: SweepConfig, s: int, T: int, k: int, mode: str = None):
    """Generate, solve and score one instance. Failures are returned, not raised."""
    mode = mode or cfg.mode
    seed = trial_seed(cfg.base_seed, s, T, k)
    system, data = make_instance(
        cfg.n, cfg.m, T, s, cfg.distribution, seed, cfg.spectral_radius, cfg.input_scale
    )
    oracle_A = system.A if mode == "oracle" else None
    try:
        red = reduce(data, cfg.m, oracle_A)
        scfg = _solver_config(cfg, red, system, data, oracle_A)
        rep = solve(data, cfg.m, scfg, red=red)
        sc = score_recovery(
            rep.A_star, rep.B_star, rep.U_star, system.A, system.B, data.U_true, rep.radius
        )
    except (RankError, DivergenceError, np.linalg.LinAlgError) as exc:
        logger.info("trial s=%d T=%d k=%d failed: %s", s, T, k, exc)
        return TrialResult(s, T, k, seed, mode, False, False, 0, np.nan, np.nan, np.inf, str(exc))
    return TrialResult(
        s, T, k, seed, mode, bool(sc.success), bool(rep.converged), rep.iterations,
        rep.primal_res, rep.dual_res, sc.max_error,
    )


def _run_trial_args(args):
    return run_trial(*args)


def run_sweep(
    base: SweepConfig,
    s_values: Optional[Sequence[int]] = None,
    T_values: Optional[Sequence[int]] = None,
    trials: Optional[int] = None,
    mode: Optional[str] = None,
    jobs: int = 1,
) -> SweepResult:
    """Success frequencies over an (s, T) grid.

    Every trial draws a fresh system and trajectory from
    :func:`trial_seed`, so a trial gives the same result alone or inside a
    sweep, and under any number of worker processes.
    """
    s_values = list(s_values if s_values is not None else base.s_values)
    T_values = list(T_values if T_values is not None else base.T_values)
    trials = int(trials if trials is not None else base.trials)
    mode = mode or base.mode
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if mode not in ("blind", "oracle"):
        raise ValueError(f"mode must be 'blind' or 'oracle', got {mode!r}")
    bad = [s for s in s_values if not 1 <= s <= base.m]
    if bad:
        raise ValueError(f"sparsity values outside [1, m={base.m}]: {bad}")
    tasks = [(base, s, T, k, mode) for s in s_values for T in T_values for k in range(trials)]
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_trial_args, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    else:
        results = [run_trial(*t) for t in tasks]
    cells = {}
    for s in s_values:
        for T in T_values:
            rs = [r for r in results if r.s == s and r.T == T]
            its = [r.iterations for r in rs]
            pr = [r.primal_res for r in rs if np.isfinite(r.primal_res)]
            dr = [r.dual_res for r in rs if np.isfinite(r.dual_res)]
            cells[(s, T)] = CellResult(
                s, T, mode, len(rs), sum(r.success for r in rs),
                float(np.mean(its)),
                float(np.mean(pr)) if pr else float("nan"),
                float(np.mean(dr)) if dr else float("nan"),
            )
    config = base.to_dict()
    config.update({"s_values": s_values, "T_values": T_values, "trials": trials, "mode": mode})
    return SweepResult(mode, s_values, T_values, cells, results, config)


CSV_COLUMNS = ("s", "T", "mode", "trials", "successes", "p_success", "mean_iters")


def sweep_csv(result: SweepResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for s in result.s_values:
        for T in result.T_values:
            c = result.cells[(s, T)]
            w.writerow([s, T, c.mode, c.trials, c.successes, repr(c.p_success), repr(c.mean_iters)])
    return buf.getvalue()


def heatmap_svg(result: SweepResult, cell: int = 24) -> str:
    """Grey-scale P(success) grid: columns are s, rows are T (largest on top)."""
    ns, nT = len(result.s_values), len(result.T_values)
    left, top = 60, 30
    width, height = left + ns * cell + 20, top + nT * cell + 40
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'font-family="sans-serif" font-size="10">',
        f'<text x="{left}" y="18">P(success), mode={result.mode}</text>',
    ]
    for j, T in enumerate(reversed(result.T_values)):
        y = top + j * cell
        parts.append(f'<text x="{left - 6}" y="{y + cell * 0.65:.1f}" text-anchor="end">{T}</text>')
        for i, s in enumerate(result.s_values):
            p = result.cells[(s, T)].p_success
            g = int(round(255 * p))
            parts.append(
                f'<rect x="{left + i * cell}" y="{y}" width="{cell}" height="{cell}" '
                f'fill="rgb({g},{g},{g})" stroke="#888" stroke-width="0.5"/>'
            )
    ybase = top + nT * cell + 14
    for i, s in enumerate(result.s_values):
        parts.append(f'<text x="{left + (i + 0.5) * cell:.1f}" y="{ybase}" text-anchor="middle">{s}</text>')
    parts.append(f'<text x="{left}" y="{ybase + 16}">s (columns) / T (rows)</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def emit_results(result: SweepResult, out, svg: bool = True):
    """Write ``sweep.csv``, ``heatmap.json``, ``manifest.json`` and optionally
    ``heatmap.svg`` into directory ``out``. Returns the list of paths.
    """
    from .io import write_json

    out = os.fspath(out)
    try:
        os.makedirs(out, exist_ok=True)
    except OSError as exc:
        raise OSError(f"could not create output directory {out}: {exc}") from exc
    paths = []

    def _write(name, text):
        path = os.path.join(out, name)
        try:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        except OSError as exc:
            raise OSError(f"could not write {path}: {exc}") from exc
        paths.append(path)

    _write("sweep.csv", sweep_csv(result))
    grid = {
        "mode": result.mode,
        "s_values": result.s_values,
        "T_values": result.T_values,
        "p_success": [[result.cells[(s, T)].p_success for s in result.s_values] for T in result.T_values],
        "successes": [[result.cells[(s, T)].successes for s in result.s_values] for T in result.T_values],
        "trials": [[result.cells[(s, T)].trials for s in result.s_values] for T in result.T_values],
        "mean_iters": [[result.cells[(s, T)].mean_iters for s in result.s_values] for T in result.T_values],
        "layout": "rows follow T_values, columns follow s_values",
    }
    write_json(os.path.join(out, "heatmap.json"), grid)
    paths.append(os.path.join(out, "heatmap.json"))
    if svg:
        _write("heatmap.svg", heatmap_svg(result))
    manifest = {
        "config": result.config,
        "seeds": [
            {"s": r.s, "T": r.T, "k": r.k, "seed": r.seed, "success": r.success}
            for r in result.trial_results
        ],
    }
    write_json(os.path.join(out, "manifest.json"), manifest)
    paths.append(os.path.join(out, "manifest.json"))
    return paths
