"""Ground-truth systems, sparse inputs and trajectories.

Conventions follow the stacked form of the dynamics
``x(k+1) = A x(k) + B u(k)``:

* ``X``     is T x n with rows ``x(0) ... x(T-1)``,
* ``Xplus`` is n x T with columns ``x(1) ... x(T)``,
* ``U``     is T x m with rows ``u(0) ... u(T-1)``,

so that ``Xplus = A X^T + B U^T``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

logger = logging.getLogger(__name__)

__all__ = [
    "DISTRIBUTIONS",
    "SimulationOverflowError",
    "SystemRealization",
    "SparseInputSpec",
    "TrajectoryData",
    "PersistencyReport",
    "scale_spectral_radius",
    "generate_system",
    "generate_sparse_inputs",
    "simulate",
    "make_instance",
    "persistency_rank",
    "input_hankel_rank",
]

DISTRIBUTIONS = ("gaussian", "laplace")
_MAX_RETRIES = 16


class SimulationOverflowError(ArithmeticError):
    """The recurrence produced a non-finite state."""

    def __init__(self, step):
        super().__init__(f"non-finite state produced at step {step}")
        self.step = step


@dataclass(frozen=True)
class SystemRealization:
    """A pair ``(A, B)`` with ``A`` n x n and ``B`` n x m of full column rank."""

    A: np.ndarray
    B: np.ndarray
    seed: Optional[int] = None
    retries: int = 0

    def __post_init__(self):
        n, m = self.B.shape
        if self.A.shape != (n, n):
            raise ValueError(f"A has shape {self.A.shape}, expected {(n, n)}")
        if n < m:
            raise ValueError(f"need n >= m, got n={n}, m={m}")

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def m(self):
        return self.B.shape[1]

    @property
    def spectral_radius(self):
        return float(np.max(np.abs(np.linalg.eigvals(self.A))))


@dataclass(frozen=True)
class SparseInputSpec:
    """Recipe for an s-sparse input sequence of length T.

    ``scale`` is the standard deviation for Gaussian nonzeros and the
    Laplace scale ``b`` for Laplace nonzeros.
    """

    s: int
    T: int
    distribution: str = "gaussian"
    seed: int = 0
    scale: float = 1.0

    def __post_init__(self):
        if self.distribution not in DISTRIBUTIONS:
            raise ValueError(
                f"distribution must be one of {DISTRIBUTIONS}, got {self.distribution!r}"
            )
        if self.s < 1:
            raise ValueError(f"sparsity s must be >= 1, got {self.s}")
        if self.T < 1:
            raise ValueError(f"T must be >= 1, got {self.T}")


@dataclass
class TrajectoryData:
    X: np.ndarray
    Xplus: np.ndarray
    U_true: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict)

    @property
    def T(self):
        return self.X.shape[0]

    @property
    def n(self):
        return self.X.shape[1]

    def states(self):
        """All T+1 states as rows of a (T+1) x n array."""
        return np.vstack([self.X, self.Xplus[:, -1:].T])


@dataclass(frozen=True)
class PersistencyReport:
    rank: int
    persistently_exciting: bool
    threshold: float
    reason: str = ""


def scale_spectral_radius(G, spectral_radius: float):
    """Return ``c * G`` whose largest eigenvalue magnitude equals ``spectral_radius``."""
    G = np.asarray(G, dtype=float)
    rho = np.max(np.abs(np.linalg.eigvals(G)))
    if not rho > np.finfo(float).eps * max(1.0, np.linalg.norm(G)):
        raise ValueError("matrix is nilpotent to machine precision")
    return (spectral_radius / rho) * G


def generate_system(n: int, m: int, spectral_radius: float = 0.9, seed: int = 0):
    """Draw ``A`` as a scaled i.i.d. Gaussian matrix and ``B`` as i.i.d. Gaussian.

    Degenerate draws (nilpotent ``G`` or rank-deficient ``B``) are redrawn from
    a perturbed seed; the number of redraws is kept in ``retries``.
    """
    if not (n >= m >= 1):
        raise ValueError(f"need n >= m >= 1, got n={n}, m={m}")
    if not spectral_radius > 0:
        raise ValueError("spectral_radius must be positive")
    for retry in range(_MAX_RETRIES):
        entropy = seed if retry == 0 else [seed, retry]
        rng = np.random.default_rng(entropy)
        G = rng.standard_normal((n, n))
        B = rng.standard_normal((n, m))
        sv = np.linalg.svd(B, compute_uv=False)
        if sv[-1] <= max(n, m) * np.finfo(float).eps * sv[0]:
            logger.info("seed %s: rank-deficient B, redrawing", seed)
            continue
        try:
            A = scale_spectral_radius(G, spectral_radius)
        except ValueError:
            logger.info("seed %s: nilpotent G, redrawing", seed)
            continue
        return SystemRealization(A, B, seed=seed, retries=retry)
    raise RuntimeError(f"could not draw a nondegenerate system from seed {seed}")


def generate_sparse_inputs(spec: SparseInputSpec, m: int):
    """T x m input matrix with exactly ``spec.s`` nonzeros per row.

    Supports are uniform ``s``-subsets of ``range(m)``, independent across
    rows; nonzero magnitudes are i.i.d. from ``spec.distribution``.
    """
    if spec.s > m:
        raise ValueError(f"sparsity s={spec.s} exceeds input dimension m={m}")
    rng = np.random.default_rng(spec.seed)
    T, s = spec.T, spec.s
    # the first s columns of a random permutation of each row
    support = np.argsort(rng.random((T, m)), axis=1)[:, :s]
    if spec.distribution == "gaussian":
        vals = rng.normal(0.0, spec.scale, size=(T, s))
    else:
        vals = rng.laplace(0.0, spec.scale, size=(T, s))
    # a magnitude draw of exactly 0.0 has probability ~2^-1074; keep s exact anyway
    vals[vals == 0.0] = spec.scale
    U = np.zeros((T, m))
    np.put_along_axis(U, support, vals, axis=1)
    return U


def simulate(system: SystemRealization, U, x0=None, meta=None) -> TrajectoryData:
    """Run the recurrence for ``T = U.shape[0]`` steps and stack the result."""
    A, B = system.A, system.B
    U = np.asarray(U, dtype=float)
    T = U.shape[0]
    if U.ndim != 2 or U.shape[1] != system.m:
        raise ValueError(f"U must have shape (T, {system.m}), got {U.shape}")
    x = np.zeros(system.n) if x0 is None else np.asarray(x0, dtype=float).copy()
    if x.shape != (system.n,):
        raise ValueError(f"x0 must have shape ({system.n},), got {x.shape}")
    states = np.empty((T + 1, system.n))
    states[0] = x
    Bu = U @ B.T
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(T):
            x = A @ x + Bu[k]
            if not np.all(np.isfinite(x)):
                raise SimulationOverflowError(k)
            states[k + 1] = x
    info = {"n": system.n, "m": system.m, "T": T}
    if meta:
        info.update(meta)
    return TrajectoryData(states[:-1].copy(), states[1:].T.copy(), U.copy(), info)


def make_instance(
    n: int,
    m: int,
    T: int,
    s: int,
    distribution: str = "gaussian",
    seed: int = 0,
    spectral_radius: float = 0.9,
    scale: float = 1.0,
):
    """Generate a system and a sparse-input trajectory from a single seed.

    The system and the input sequence get independent child seeds so that
    the trajectory is reproducible from ``seed`` alone.
    """
    sys_seed, input_seed = (
        int(c.generate_state(1)[0]) for c in np.random.SeedSequence(seed).spawn(2)
    )
    system = generate_system(n, m, spectral_radius, sys_seed)
    spec = SparseInputSpec(s=s, T=T, distribution=distribution, seed=input_seed, scale=scale)
    U = generate_sparse_inputs(spec, m)
    meta = {
        "s": s,
        "distribution": distribution,
        "seed": seed,
        "system_seed": sys_seed,
        "input_seed": input_seed,
        "system_retries": system.retries,
        "spectral_radius": spectral_radius,
        "scale": scale,
        "x0": "zeros",
    }
    return system, simulate(system, U, meta=meta)


def persistency_rank(X, U) -> PersistencyReport:
    """Numerical rank of ``[X, U]`` and whether it reaches ``n + m``."""
    X = np.asarray(X, dtype=float)
    U = np.asarray(U, dtype=float)
    if X.shape[0] != U.shape[0]:
        raise ValueError(f"row counts differ: {X.shape[0]} vs {U.shape[0]}")
    Z = np.hstack([X, U])
    T, k = Z.shape
    s = np.linalg.svd(Z, compute_uv=False)
    thresh = max(T, k) * np.finfo(float).eps * (s[0] if s.size else 0.0)
    rank = int(np.sum(s > thresh)) if s.size and s[0] > 0 else 0
    if T < k:
        return PersistencyReport(rank, False, thresh, "insufficient samples")
    ok = rank == k
    return PersistencyReport(rank, ok, thresh, "" if ok else "rank deficient")


def input_hankel_rank(U, order: int):
    """Rank of the depth-``order`` block Hankel matrix of the input sequence.

    The input is persistently exciting of order ``L`` when this rank equals
    ``L * m``.
    """
    U = np.asarray(U, dtype=float)
    T, m = U.shape
    cols = T - order + 1
    if cols < 1:
        return 0
    H = np.vstack([U[i : i + cols].T for i in range(order)])
    s = np.linalg.svd(H, compute_uv=False)
    thresh = max(H.shape) * np.finfo(float).eps * (s[0] if s.size else 0.0)
    return int(np.sum(s > thresh)) if s.size and s[0] > 0 else 0
