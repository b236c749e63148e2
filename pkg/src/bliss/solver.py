"""Generalized ADMM for blind identification by volume minimization.

The identification problem

    min vol(B)  s.t.  Xplus = A X^T + B U^T,  max_i ||U_i||_1 <= radius

is reduced through a thin SVD ``Xplus P = Q Sigma V^T`` (``P`` the projector
onto ``img(X)^perp``) to

    min -log|det Phi|  s.t.  V Phi = P U,  max_i ||U_i||_1 <= radius,

which is solved by Gauss-Seidel ADMM with a proximal term on the ``U``
update, closed-form prox steps, and primal-dual residual balancing of the
penalty ``rho``. The system is recovered as ``B = Q Sigma Phi^{-T}`` and
``A = (Xplus - B U^T) (X^T)^+``.

With a known state transition matrix the projector is replaced by the
identity and the problem is complete dictionary learning on the innovation
``Xplus - A X^T``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .lti import TrajectoryData
from .numkit import (
    IdentityProjector,
    ProjectorHandle,
    ThinSVD,
    project_l1_columns,
    projector_complement,
    prox_neg_logdet,
    thin_svd_rank_m,
)

logger = logging.getLogger(__name__)

__all__ = [
    "DivergenceError",
    "SolverConfig",
    "ReducedProblem",
    "SolverState",
    "SolveReport",
    "reduce",
    "default_rho0",
    "oracle_rho0",
    "initial_state",
    "admm_step",
    "balance_rho",
    "solve",
]


class DivergenceError(RuntimeError):
    """An iterate became non-finite."""

    def __init__(self, iteration):
        super().__init__(f"non-finite iterate at iteration {iteration}")
        self.iteration = iteration


@dataclass(frozen=True)
class SolverConfig:
    """Solver parameters.

    ``radius`` is the l1 budget per input column. ``radius=None`` means
    ``mu * T``, i.e. an average input magnitude of ``mu`` per time step.
    ``rho0=None`` selects the data-driven default of :func:`default_rho0`.
    ``rho_min=None`` sets the penalty floor to ``rho0 / 1024``.
    """

    radius: Optional[float] = None
    mu: float = 1.0
    rho0: Optional[float] = None
    fixed_phase: int = 200
    alpha: float = 1.2
    tau: float = 2.0
    max_iters: int = 3000
    tol: float = 1e-6
    rho_min: Optional[float] = None
    oracle_A: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.radius is not None and not self.radius > 0:
            raise ValueError("radius must be positive")
        if not self.mu > 0:
            raise ValueError("mu must be positive")
        if not self.alpha > 1:
            raise ValueError("alpha must exceed 1")
        if not self.tau > 1:
            raise ValueError("tau must exceed 1")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.rho0 is not None and not self.rho0 > 0:
            raise ValueError("rho0 must be positive")
        if self.max_iters < 1 or self.fixed_phase < 0:
            raise ValueError("max_iters must be >= 1 and fixed_phase >= 0")

    def radius_for(self, T: int) -> float:
        return float(self.radius) if self.radius is not None else self.mu * T


@dataclass(frozen=True)
class ReducedProblem:
    """Factors of the reduced problem.

    ``projector`` is the complement projector of ``img(X)`` in blind mode and
    an identity stand-in in oracle mode.
    """

    svd: ThinSVD
    projector: Union[ProjectorHandle, IdentityProjector]
    oracle: bool = False

    @property
    def Q(self):
        return self.svd.Q

    @property
    def sigma(self):
        return self.svd.sigma

    @property
    def V(self):
        return self.svd.V

    @property
    def m(self):
        return self.svd.sigma.size


@dataclass
class SolverState:
    """ADMM iterates.

    ``rho`` is the penalty that will be used by the next step; ``rho_used``
    is the one used to produce the current ``Phi``. ``history`` rows are
    ``(||R||_F, ||S||_F, rho_used)`` and the list is shared between
    successive states.
    """

    Phi: np.ndarray
    U: np.ndarray
    Lambda: np.ndarray
    rho: float
    iter: int = 0
    primal_res: float = np.inf
    dual_res: float = np.inf
    rho_used: float = np.nan
    history: list = field(default_factory=list)


@dataclass
class SolveReport:
    A_star: np.ndarray
    B_star: np.ndarray
    U_star: np.ndarray
    Phi: np.ndarray
    converged: bool
    iterations: int
    primal_res: float
    dual_res: float
    rho0: float
    rho_final: float
    history: np.ndarray
    floor_hits: int = 0
    mode: str = "blind"
    radius: float = 1.0

    def to_dict(self):
        """JSON-ready summary (matrices excluded)."""
        return {
            "mode": self.mode,
            "converged": bool(self.converged),
            "iterations": int(self.iterations),
            "primal_residual": float(self.primal_res),
            "dual_residual": float(self.dual_res),
            "rho0": float(self.rho0),
            "rho_final": float(self.rho_final),
            "rho_floor_hits": int(self.floor_hits),
            "radius": float(self.radius),
            "history": {
                "primal_residual": self.history[:, 0].tolist(),
                "dual_residual": self.history[:, 1].tolist(),
                "rho": self.history[:, 2].tolist(),
            },
        }


def reduce(data: TrajectoryData, m: int, oracle_A=None) -> ReducedProblem:
    """Thin SVD of ``Xplus P`` (blind) or of ``Xplus - A X^T`` (known ``A``)."""
    X = np.asarray(data.X, dtype=float)
    Xplus = np.asarray(data.Xplus, dtype=float)
    # innovation below round-off of the data counts as zero
    scale = float(np.linalg.norm(Xplus, 2)) if Xplus.size else 0.0
    if oracle_A is not None:
        R = Xplus - np.asarray(oracle_A, dtype=float) @ X.T
        return ReducedProblem(thin_svd_rank_m(R, m, scale), IdentityProjector(), oracle=True)
    P = projector_complement(X)
    # (Xplus P)^T = P Xplus^T since P is symmetric
    M = P.apply(Xplus.T).T
    return ReducedProblem(thin_svd_rank_m(M, m, scale), P, oracle=False)


def default_rho0(red: ReducedProblem, B_hint=None, c: float = 2.0) -> float:
    """Initial penalty.

    With ``B_hint`` this is ``c * sigma_max((Xplus P)^+ B_hint)**2``, evaluated
    as ``c * sigma_max(Sigma^{-1} Q^T B_hint)**2``. Without it, the fallback is
    ``c * sigma_max((Xplus P)^+)**2 = c / sigma_min(Sigma)**2``.
    """
    if B_hint is None:
        return float(c / red.sigma[-1] ** 2)
    G = (red.Q.T @ np.asarray(B_hint, dtype=float)) / red.sigma[:, None]
    return float(c * np.linalg.norm(G, 2) ** 2)


def oracle_rho0(red: ReducedProblem, B_true, U_true, radius: Optional[float] = None, c: float = 2.0):
    """:func:`default_rho0` with the true ``B`` brought to the solver's gauge.

    The columns of ``B_true`` are rescaled as if every column of ``U_true``
    had l1 norm ``radius`` (default ``T``), which is the scale of the
    target solution.
    """
    U_true = np.asarray(U_true, dtype=float)
    if radius is None:
        radius = float(U_true.shape[0])
    w = np.abs(U_true).sum(axis=0) / radius
    return default_rho0(red, np.asarray(B_true, dtype=float) * w, c=c)


def initial_state(red: ReducedProblem, cfg: SolverConfig, rho0: float) -> SolverState:
    """``Phi = max(1/sqrt(rho0), 1) I``, ``U = Pi_C(V Phi)``, ``Lambda = 0``."""
    m = red.m
    Phi = max(1.0 / np.sqrt(rho0), 1.0) * np.eye(m)
    U = project_l1_columns(red.V @ Phi, cfg.radius_for(red.V.shape[0]))
    return SolverState(Phi, U, np.zeros_like(U), float(rho0))


def admm_step(state: SolverState, red: ReducedProblem, cfg: SolverConfig) -> SolverState:
    """One Gauss-Seidel sweep: U update, Phi update, dual ascent.

    The Phi update applies the prox to the m x m matrix
    ``V^T (P U - Lambda / rho)``; since ``V^T V = I`` this equals the
    minimizer of the augmented Lagrangian over Phi.
    """
    V, P, rho = red.V, red.projector, state.rho
    radius = cfg.radius_for(V.shape[0])
    U = project_l1_columns(V @ state.Phi + state.Lambda / rho + P.apply_range(state.U), radius)
    PU = P.apply(U)
    W = V.T @ (PU - state.Lambda / rho)
    if not np.all(np.isfinite(W)):
        raise DivergenceError(state.iter + 1)
    Phi = prox_neg_logdet(W, 1.0 / rho)
    R = V @ Phi - PU
    Lambda = state.Lambda + rho * R
    primal = float(np.linalg.norm(R))
    # ||rho V dPhi||_F = rho ||dPhi||_F because V has orthonormal columns
    dual = float(rho * np.linalg.norm(Phi - state.Phi))
    k = state.iter + 1
    if not (np.isfinite(primal) and np.isfinite(dual) and np.all(np.isfinite(U))):
        raise DivergenceError(k)
    state.history.append((primal, dual, rho))
    return SolverState(Phi, U, Lambda, rho, k, primal, dual, rho, state.history)


def balance_rho(state: SolverState, cfg: SolverConfig, rho_min: float = 0.0) -> float:
    """Residual balancing: grow rho when the primal residual dominates, shrink
    it when the dual residual dominates, never going below ``rho_min``.
    """
    r, s, rho = state.primal_res, state.dual_res, state.rho
    if r >= cfg.alpha * s:
        return rho * cfg.tau
    if s >= cfg.alpha * r:
        return max(rho / cfg.tau, rho_min)
    return rho


def _reconstruct(data, red, cfg, Phi, U):
    B = (red.Q * red.sigma) @ np.linalg.inv(Phi).T
    if cfg.oracle_A is not None:
        A = np.array(cfg.oracle_A, dtype=float, copy=True)
    else:
        resid = data.Xplus - B @ U.T
        A = np.linalg.lstsq(data.X, resid.T, rcond=None)[0].T
    return A, B


def solve(
    data: TrajectoryData,
    m: int,
    cfg: Optional[SolverConfig] = None,
    red: Optional[ReducedProblem] = None,
    callback=None,
) -> SolveReport:
    """Identify ``(A, B, U)`` from a trajectory.

    Parameters
    ----------
    data : TrajectoryData
        Only ``X`` and ``Xplus`` are used.
    m : int
        Input dimension.
    cfg : SolverConfig, optional
    red : ReducedProblem, optional
        Precomputed reduction; must match ``cfg.oracle_A``.
    callback : callable, optional
        Called as ``callback(state)`` after every step.

    Returns
    -------
    SolveReport
    """
    cfg = cfg or SolverConfig()
    if red is None:
        red = reduce(data, m, cfg.oracle_A)
    rho0 = cfg.rho0 if cfg.rho0 is not None else default_rho0(red)
    rho_min = cfg.rho_min if cfg.rho_min is not None else rho0 / 1024.0
    state = initial_state(red, cfg, rho0)
    converged = False
    floor_hits = 0
    for _ in range(cfg.max_iters):
        state = admm_step(state, red, cfg)
        if callback is not None:
            callback(state)
        if state.primal_res < cfg.tol and state.dual_res < cfg.tol:
            converged = True
            break
        if state.iter >= cfg.fixed_phase:
            new_rho = balance_rho(state, cfg, rho_min)
            if new_rho == rho_min and state.rho / cfg.tau < rho_min:
                floor_hits += 1
            state.rho = new_rho
    A, B = _reconstruct(data, red, cfg, state.Phi, state.U)
    logger.debug(
        "solve finished: converged=%s iters=%d r=%.3g s=%.3g",
        converged, state.iter, state.primal_res, state.dual_res,
    )
    return SolveReport(
        A_star=A,
        B_star=B,
        U_star=state.U,
        Phi=state.Phi,
        converged=converged,
        iterations=state.iter,
        primal_res=state.primal_res,
        dual_res=state.dual_res,
        rho0=float(rho0),
        rho_final=float(state.rho),
        history=np.asarray(state.history, dtype=float).reshape(-1, 3),
        floor_hits=floor_hits,
        mode="oracle" if cfg.oracle_A is not None else "blind",
        radius=cfg.radius_for(red.V.shape[0]),
    )
