"""Shared numerical kernels.

Thin SVD with rank checks, the orthogonal projector onto the complement of
a column space, the proximal operator of ``-log|det|``, column-wise
projection onto an l1 ball, and matrix volume.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

__all__ = [
    "RankError",
    "WeakRankGapWarning",
    "ProjectorHandle",
    "IdentityProjector",
    "ThinSVD",
    "projector_complement",
    "thin_svd_rank_m",
    "prox_neg_logdet",
    "project_l1_columns",
    "project_l1",
    "volume",
]

RANK_GAP_RATIO = 10.0


class RankError(ValueError):
    """Raised when a matrix has lower numerical rank than required."""


class WeakRankGapWarning(UserWarning):
    """The m-th singular value is not well separated from the (m+1)-th."""


def _rank_threshold(s, shape):
    if s.size == 0:
        return 0.0
    return max(shape) * np.finfo(float).eps * s[0]


@dataclass(frozen=True)
class ProjectorHandle:
    """Orthogonal projector onto ``img(X)^perp``, stored as a basis of ``img(X)``.

    ``apply(M)`` computes ``M - Q (Q^T M)`` so no T x T matrix is formed.
    """

    basis: np.ndarray
    rank: int

    def apply(self, M):
        """Return ``(I - X X^+) M``."""
        if self.rank == 0:
            return np.array(M, dtype=float, copy=True)
        return M - self.basis @ (self.basis.T @ M)

    def apply_range(self, M):
        """Return ``X X^+ M``, the component of ``M`` inside ``img(X)``."""
        if self.rank == 0:
            return np.zeros_like(M, dtype=float)
        return self.basis @ (self.basis.T @ M)


class IdentityProjector:
    """Stand-in projector used when the state transition matrix is known."""

    rank = 0

    def apply(self, M):
        return np.array(M, dtype=float, copy=True)

    def apply_range(self, M):
        return np.zeros_like(M, dtype=float)


@dataclass(frozen=True)
class ThinSVD:
    """Rank-m factors ``M ~= Q diag(sigma) V^T``.

    ``tail`` holds the discarded singular values (sigma_{m+1}, ...), kept for
    rank-gap diagnostics.
    """

    Q: np.ndarray
    sigma: np.ndarray
    V: np.ndarray
    tail: np.ndarray

    @property
    def Sigma(self):
        return np.diag(self.sigma)

    def reconstruct(self):
        return (self.Q * self.sigma) @ self.V.T


def projector_complement(X) -> ProjectorHandle:
    """Build a handle for the projector onto the orthogonal complement of ``img(X)``.

    Parameters
    ----------
    X : (T, n) array

    Returns
    -------
    ProjectorHandle
        The basis is the leading left singular vectors of ``X`` whose singular
        values clear ``max(T, n) * eps * sigma_max``. A zero ``X`` gives the
        identity projector.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] < 1:
        raise ValueError(f"X must be a 2-D array with at least one row, got {X.shape}")
    if X.size == 0 or not np.any(X):
        return ProjectorHandle(np.zeros((X.shape[0], 0)), 0)
    U, s, _ = np.linalg.svd(X, full_matrices=False)
    r = int(np.sum(s > _rank_threshold(s, X.shape)))
    return ProjectorHandle(np.ascontiguousarray(U[:, :r]), r)


def thin_svd_rank_m(M, m: int, scale: float = 0.0) -> ThinSVD:
    """Top-m singular triplets of ``M``.

    ``scale`` is a reference magnitude (e.g. the norm of the data ``M`` was
    derived from); the rank threshold is relative to the larger of it and
    ``sigma_max(M)``, so a numerically zero ``M`` is reported as rank 0.

    Raises
    ------
    RankError
        If ``sigma_m`` does not clear the numerical rank threshold, i.e. the
        innovation has rank below ``m``.

    Warns
    -----
    WeakRankGapWarning
        If ``sigma_m / sigma_{m+1} < 10``.
    """
    M = np.asarray(M, dtype=float)
    if m < 1:
        raise ValueError("m must be positive")
    if m > min(M.shape):
        raise RankError(
            f"innovation rank below m: m={m} exceeds min dimension of {M.shape}"
        )
    U, s, Vt = np.linalg.svd(M, full_matrices=False)
    thresh = max(M.shape) * np.finfo(float).eps * max(s[0], scale)
    if s[0] == 0.0 or s[m - 1] <= thresh:
        rank = int(np.sum(s > thresh)) if s[0] > 0 else 0
        raise RankError(
            f"innovation rank below m: numerical rank {rank} < m={m} "
            "(m misspecified or insufficient excitation)"
        )
    tail = s[m:]
    if tail.size and tail[0] > 0 and s[m - 1] / tail[0] < RANK_GAP_RATIO:
        warnings.warn(
            f"weak rank gap: sigma_m/sigma_(m+1) = {s[m - 1] / tail[0]:.3g}",
            WeakRankGapWarning,
            stacklevel=2,
        )
    return ThinSVD(U[:, :m].copy(), s[:m].copy(), Vt[:m].T.copy(), tail.copy())


def prox_neg_logdet(W, lam: float):
    r"""Proximal operator of ``lam * (-log|det Phi|)`` evaluated at ``W``.

    With ``W = U_W diag(s) V_W^T``, the result is
    ``U_W diag((s + sqrt(s**2 + 4 lam)) / 2) V_W^T``. The singular vectors of
    ``W`` are kept as returned by the SVD, so the orientation of ``W`` is
    preserved. Every singular value of the output is at least ``sqrt(lam)``.

    Parameters
    ----------
    W : (m, m) array
    lam : float
        Positive step size.

    Returns
    -------
    (m, m) array
    """
    if not lam > 0:
        raise ValueError(f"lam must be positive, got {lam}")
    W = np.asarray(W, dtype=float)
    if W.ndim == 0 or W.shape == (1,) or W.shape == (1, 1):
        w = float(np.reshape(W, ()))
        # 1x1: keep the sign of w (sign(0) taken as +1)
        phi = 0.5 * (abs(w) + np.sqrt(w * w + 4.0 * lam))
        return np.reshape(np.copysign(phi, w) if w != 0 else phi, W.shape)
    U, s, Vt = np.linalg.svd(W)
    phi = 0.5 * (s + np.sqrt(s * s + 4.0 * lam))
    return (U * phi) @ Vt


def project_l1(v, radius: float = 1.0):
    """Euclidean projection of a vector onto ``{x : ||x||_1 <= radius}``."""
    v = np.asarray(v, dtype=float)
    return project_l1_columns(v[:, None], radius)[:, 0]


def project_l1_columns(M, radius: float = 1.0):
    """Project every column of ``M`` onto the l1 ball of the given radius.

    Exact sort-based method: for a column outside the ball, sort the
    magnitudes in decreasing order, locate the last index ``j`` with
    ``u_j > (sum_{i<=j} u_i - radius) / j`` and soft-threshold by that
    quotient. Columns already inside the ball are returned unchanged.
    """
    if not radius > 0:
        raise ValueError(f"radius must be positive, got {radius}")
    M = np.asarray(M, dtype=float)
    out = M.copy()
    A = np.abs(M)
    norms = A.sum(axis=0)
    outside = norms > radius
    if not np.any(outside):
        return out
    Ao = A[:, outside]
    u = -np.sort(-Ao, axis=0)
    css = np.cumsum(u, axis=0)
    j = np.arange(1, u.shape[0] + 1)[:, None]
    cond = u * j > css - radius
    # cond holds on a prefix of the sorted order; its length is the support size
    k = cond.sum(axis=0)
    cols = np.arange(u.shape[1])
    theta = (css[k - 1, cols] - radius) / k
    out[:, outside] = np.sign(M[:, outside]) * np.maximum(Ao - theta, 0.0)
    return out


def volume(B) -> float:
    """``sqrt(det(B^T B))``, computed as the product of singular values."""
    B = np.asarray(B, dtype=float)
    if B.shape[0] < B.shape[1]:
        raise ValueError(f"volume needs a tall matrix, got shape {B.shape}")
    return float(np.prod(np.linalg.svd(B, compute_uv=False)))
