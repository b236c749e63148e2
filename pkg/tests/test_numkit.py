import warnings

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st
from hypothesis.extra.numpy import arrays
from scipy.optimize import minimize_scalar

from bliss.numkit import (
    IdentityProjector,
    RankError,
    WeakRankGapWarning,
    project_l1,
    project_l1_columns,
    projector_complement,
    prox_neg_logdet,
    thin_svd_rank_m,
    volume,
)
from oracles import project_l1_bruteforce

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


# -- prox of -log|det| -------------------------------------------------------

def test_prox_identity_gives_golden_ratio():
    out = prox_neg_logdet(np.eye(3), 1.0)
    phi = (1 + np.sqrt(5)) / 2
    np.testing.assert_allclose(out, phi * np.eye(3), atol=1e-14)
    assert abs((phi - 1) - 1 / phi) < 1e-14


def test_prox_scalar_zero():
    assert prox_neg_logdet(np.zeros((1, 1)), 1.0)[0, 0] == 1.0
    assert prox_neg_logdet(0.0, 4.0) == 2.0


def test_prox_scalar_three_against_golden_section():
    res = minimize_scalar(lambda p: -np.log(abs(p)) + 0.5 * (p - 3) ** 2,
                          bracket=(0.5, 3.0, 10.0), method="golden", tol=1e-12)
    out = float(prox_neg_logdet(np.array([[3.0]]), 1.0)[0, 0])
    assert abs(out - (3 + np.sqrt(13)) / 2) < 1e-14
    assert abs(out - res.x) < 1e-7


def test_prox_scalar_keeps_sign():
    assert prox_neg_logdet(np.array([[-3.0]]), 1.0)[0, 0] == pytest.approx(-(3 + np.sqrt(13)) / 2)


def test_prox_rejects_nonpositive_lambda():
    with pytest.raises(ValueError):
        prox_neg_logdet(np.eye(2), 0.0)


def _objective(P, W, lam):
    return -lam * np.linalg.slogdet(P)[1] + 0.5 * np.sum((P - W) ** 2)


def test_prox_gradient_vanishes_finite_difference(rng):
    h = 1e-6
    for _ in range(20):
        m = int(rng.integers(1, 6))
        W = rng.standard_normal((m, m))
        lam = float(rng.uniform(0.1, 3))
        P = prox_neg_logdet(W, lam)
        # analytic gradient of the objective
        g = -lam * np.linalg.inv(P).T + (P - W)
        fd = np.zeros_like(P)
        for i in range(m):
            for j in range(m):
                E = np.zeros_like(P)
                E[i, j] = h
                fd[i, j] = (_objective(P + E, W, lam) - _objective(P - E, W, lam)) / (2 * h)
        scale = np.linalg.norm(P - W) + lam * np.linalg.norm(np.linalg.inv(P))
        assert np.linalg.norm(g) <= 1e-12 * scale
        assert np.linalg.norm(fd) <= 1e-5 * scale


def test_prox_matches_local_minimum(rng):
    W = rng.standard_normal((4, 4))
    P = prox_neg_logdet(W, 0.7)
    f0 = _objective(P, W, 0.7)
    for _ in range(50):
        assert _objective(P + 1e-3 * rng.standard_normal((4, 4)), W, 0.7) >= f0


@settings(max_examples=60, deadline=None)
@given(arrays(float, (3, 3), elements=finite), st.floats(1e-4, 1e3))
def test_prox_floor_property(W, lam):
    s = np.linalg.svd(prox_neg_logdet(W, lam), compute_uv=False)
    assert s.min() >= np.sqrt(lam) * (1 - 1e-12)


@settings(max_examples=40, deadline=None)
@given(arrays(float, (3, 3), elements=finite), st.floats(1e-3, 10.0))
def test_prox_orthogonal_equivariance(W, lam):
    # the prox is single-valued only for nonsingular W
    assume(np.linalg.svd(W, compute_uv=False).min() > 1e-3)
    Q = np.linalg.qr(np.arange(1.0, 10.0).reshape(3, 3) + np.eye(3))[0]
    lhs = prox_neg_logdet(Q @ W, lam)
    rhs = Q @ prox_neg_logdet(W, lam)
    np.testing.assert_allclose(lhs, rhs, atol=1e-9 * (1 + np.abs(W).max() + lam))


# -- l1 projection -----------------------------------------------------------

def test_l1_axis_point():
    np.testing.assert_array_equal(project_l1(np.array([2.0, 0.0]), 1.0), [1.0, 0.0])


def test_l1_interior_point_unchanged():
    v = np.array([0.3, -0.2])
    np.testing.assert_array_equal(project_l1(v, 1.0), v)


def test_l1_soft_threshold_example():
    np.testing.assert_allclose(project_l1(np.array([1.0, 1.0]), 1.0), [0.5, 0.5], atol=1e-15)


def test_l1_simplex_grid_crosscheck():
    # brute-force QP on a fine grid of the boundary segment x1 + x2 = 1, x >= 0
    t = np.linspace(0, 1, 100001)
    d = (t - 1) ** 2 + (1 - t - 1) ** 2
    assert abs(t[np.argmin(d)] - 0.5) < 1e-4


def test_l1_matches_face_enumeration(rng):
    for _ in range(100):
        d = int(rng.integers(1, 6))
        v = rng.standard_normal(d) * rng.uniform(0.1, 4)
        r = float(rng.choice([0.5, 1.0, 3.0]))
        np.testing.assert_allclose(project_l1(v, r), project_l1_bruteforce(v, r), atol=1e-12)


def test_l1_variational_inequality(rng):
    for _ in range(20):
        v = rng.standard_normal(6) * 3
        p = project_l1(v, 1.0)
        assert np.abs(p).sum() <= 1.0 + 1e-12
        Y = rng.standard_normal((100, 6))
        Y = Y / np.abs(Y).sum(axis=1, keepdims=True) * rng.uniform(0, 1, (100, 1))
        assert np.all((Y - p) @ (v - p) <= 1e-12)


def test_l1_columns_match_single_vectors(rng):
    M = rng.standard_normal((7, 9)) * 2
    M[:, 0] *= 0.01
    out = project_l1_columns(M, 1.5)
    for j in range(M.shape[1]):
        np.testing.assert_allclose(out[:, j], project_l1(M[:, j], 1.5), atol=1e-15)
    np.testing.assert_array_equal(out[:, 0], M[:, 0])


@settings(max_examples=80, deadline=None)
@given(arrays(float, (5, 3), elements=finite), st.floats(0.01, 20.0))
def test_l1_columns_feasible_and_idempotent(M, r):
    P = project_l1_columns(M, r)
    assert np.all(np.abs(P).sum(axis=0) <= r * (1 + 1e-12))
    np.testing.assert_allclose(project_l1_columns(P, r), P, atol=1e-12 * max(r, 1))


# -- projector ---------------------------------------------------------------

def test_projector_zero_matrix_is_identity(rng):
    M = rng.standard_normal((6, 3))
    P = projector_complement(np.zeros((6, 2)))
    assert P.rank == 0
    np.testing.assert_array_equal(P.apply(M), M)


def test_projector_annihilates_orthonormal_columns(rng):
    Qx = np.linalg.qr(rng.standard_normal((10, 3)))[0]
    np.testing.assert_allclose(projector_complement(Qx).apply(Qx), 0, atol=1e-14)


def test_projector_matches_dense_pinv(rng):
    for T in (5, 12, 20):
        X = rng.standard_normal((T, 3))
        M = rng.standard_normal((T, 4))
        dense = np.eye(T) - X @ np.linalg.pinv(X)
        P = projector_complement(X)
        np.testing.assert_allclose(P.apply(M), dense @ M, atol=1e-10)
        np.testing.assert_allclose(P.apply_range(M), M - dense @ M, atol=1e-10)


def test_projector_rank_deficient(rng):
    X = rng.standard_normal((15, 2))
    X = np.hstack([X, X[:, :1] * 2.0])
    assert projector_complement(X).rank == 2


def test_projector_idempotent_and_symmetric(rng):
    X = rng.standard_normal((30, 4))
    P = projector_complement(X)
    M = rng.standard_normal((30, 5))
    PM = P.apply(M)
    np.testing.assert_allclose(P.apply(PM), PM, atol=1e-12)
    N = rng.standard_normal((30, 5))
    assert abs(np.sum(N * PM) - np.sum(P.apply(N) * M)) < 1e-10


def test_identity_projector():
    M = np.arange(6.0).reshape(3, 2)
    P = IdentityProjector()
    np.testing.assert_array_equal(P.apply(M), M)
    np.testing.assert_array_equal(P.apply_range(M), 0 * M)


# -- thin SVD ----------------------------------------------------------------

def test_thin_svd_diagonal_case():
    M = np.zeros((5, 4))
    M[:3, :3] = np.diag([3.0, 2.0, 1.0])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", WeakRankGapWarning)
        svd = thin_svd_rank_m(M, 2)
    np.testing.assert_allclose(svd.sigma, [3.0, 2.0])
    np.testing.assert_allclose(svd.Sigma, np.diag([3.0, 2.0]))


def test_thin_svd_warns_on_weak_gap():
    M = np.diag([3.0, 2.0, 1.0])
    with pytest.warns(WeakRankGapWarning):
        thin_svd_rank_m(M, 2)


def test_thin_svd_rank_error():
    M = np.outer(np.ones(5), np.ones(3))
    with pytest.raises(RankError, match="innovation rank below m"):
        thin_svd_rank_m(M, 2)


def test_thin_svd_generated_innovation_rank(small_instance):
    system, data = small_instance
    P = projector_complement(data.X)
    M = P.apply(data.U_true @ system.B.T).T
    svd = thin_svd_rank_m(M, system.m)
    # exactly m significant singular values
    assert svd.tail.max(initial=0.0) < 1e-8 * svd.sigma[-1]
    np.testing.assert_allclose(svd.reconstruct(), M, atol=1e-9 * np.abs(M).max())


# -- volume ------------------------------------------------------------------

def test_volume_examples(rng):
    assert volume(np.eye(3)[:, :2]) == pytest.approx(1.0)
    assert volume(np.vstack([np.diag([2.0, 3.0]), np.zeros((2, 2))])) == pytest.approx(6.0)
    assert volume(np.array([[1.0, 2.0], [2.0, 4.0]])) == pytest.approx(0.0, abs=1e-12)
    B = rng.standard_normal((7, 3))
    ref = np.prod(np.linalg.svd(B, compute_uv=False))
    assert abs(volume(B) - ref) <= 1e-10 * ref
    assert abs(volume(B) - np.sqrt(np.linalg.det(B.T @ B))) <= 1e-10 * ref
