import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from bliss.certificate import (
    c3_uniqueness_margin,
    check_persistent_scattering,
    normalize_pair,
    omega,
    support_function,
)
from bliss.lti import make_instance
from oracles import l1_regression_vertices


def _random_pair(rng, T=20, n=2, m=3):
    return normalize_pair(rng.standard_normal((T, n)), rng.standard_normal((T, m)))


def _identity_block_pair(m):
    """Ut = [I; I] / 2 and one state column +1 on the first block, -1 on the second.

    Here Omega(v) = ||v||_1 exactly, so C1, C2 and C3 all hold.
    """
    U = np.vstack([np.eye(m), np.eye(m)])
    x = np.concatenate([np.ones(m), -np.ones(m)])[:, None]
    return normalize_pair(x, U)


def test_normalize_simple_column():
    p = normalize_pair(np.ones((2, 1)), np.array([[2.0], [2.0]]))
    np.testing.assert_allclose(p.Ut[:, 0], [0.5, 0.5])
    np.testing.assert_allclose(p.u_norms, [4.0])


def test_normalize_idempotent(rng):
    p = _random_pair(rng)
    q = normalize_pair(p.Xt, p.Ut)
    np.testing.assert_allclose(q.Xt, p.Xt, atol=1e-15)
    np.testing.assert_allclose(q.Ut, p.Ut, atol=1e-15)


def test_normalize_column_norms(rng):
    p = _random_pair(rng, T=50, n=6, m=4)
    assert np.all(np.abs(np.abs(p.Xt).sum(axis=0) - 1) <= 1e-12)
    assert np.all(np.abs(np.abs(p.Ut).sum(axis=0) - 1) <= 1e-12)


def test_normalize_zero_column_named():
    U = np.ones((4, 3))
    U[:, 2] = 0
    with pytest.raises(ValueError, match="column 2 of U"):
        normalize_pair(np.ones((4, 1)), U)


def test_support_function_examples(rng):
    p = _random_pair(rng)
    for i in range(p.m):
        assert support_function(p, np.zeros(p.n), np.eye(p.m)[i]) == pytest.approx(1.0)
    assert support_function(p, np.zeros(p.n), np.zeros(p.m)) == 0.0


def test_omega_without_state_block(rng):
    U = rng.standard_normal((10, 3))
    p = normalize_pair(np.zeros((10, 0)), U)
    v = rng.standard_normal(3)
    r = omega(p, v)
    assert r.ok and r.value == pytest.approx(np.abs(p.Ut @ v).sum())


def test_omega_half_half_example():
    p = normalize_pair(np.ones((2, 1)), np.eye(2))
    np.testing.assert_allclose(p.Xt[:, 0], [0.5, 0.5])
    r = omega(p, np.array([1.0, 0.0]))
    assert r.ok and abs(r.value - 1.0) < 1e-9
    # 1-D scan: |w/2 + 1| + |w/2| equals 1 exactly on [-2, 0]
    w = np.linspace(-3, 1, 4001)
    f = np.abs(w / 2 + 1) + np.abs(w / 2)
    flat = w[np.abs(f - 1) < 1e-12]
    assert flat.min() == pytest.approx(-2) and flat.max() == pytest.approx(0)
    assert -2 - 1e-9 <= r.w_star[0] <= 1e-9
    # the minimizer is not unique, so C3 must fail for this data
    assert c3_uniqueness_margin(p, 0) <= 1e-9


def test_omega_kkt_and_value(rng):
    p = _random_pair(rng, T=30, n=3, m=3)
    v = rng.standard_normal(3)
    r = omega(p, v)
    assert r.ok and r.kkt_residual < 1e-8
    assert r.value == pytest.approx(support_function(p, r.w_star, v), abs=1e-9)


def test_omega_matches_vertex_enumeration(rng):
    for _ in range(10):
        T, n, m = int(rng.integers(6, 25)), int(rng.integers(1, 3)), int(rng.integers(1, 4))
        p = _random_pair(rng, T, n, m)
        v = rng.standard_normal(m)
        ref, _ = l1_regression_vertices(p.Xt, p.Ut @ v)
        assert abs(omega(p, v).value - ref) <= 1e-9


@settings(max_examples=40, deadline=None)
@given(arrays(float, 3, elements=st.floats(-5, 5)), st.floats(0.01, 100.0), st.integers(0, 1000))
def test_omega_homogeneous_and_bounded(v, c, seed):
    p = _random_pair(np.random.default_rng(seed), T=15, n=2, m=3)
    a = omega(p, v).value
    assert a <= np.abs(p.Ut @ v).sum() + 1e-9
    assert abs(omega(p, c * v).value - c * a) <= 1e-8 * max(1.0, c * a)


def test_identity_block_certified():
    p = _identity_block_pair(3)
    v = np.array([0.3, -1.0, 2.0])
    assert omega(p, v).value == pytest.approx(np.abs(v).sum(), abs=1e-9)
    rep = check_persistent_scattering(p, num_samples=200, seed=1)
    assert rep.overall == "certified-sampled"
    assert rep.c1_pass and rep.c2_pass and rep.c3_pass
    assert rep.c1_min_margin >= -1e-9
    for entry in rep.c3_results:
        assert abs(entry["omega_value"] - 1) <= 1e-9
        assert entry["unique_margin"] > 0


def test_duplicate_columns_refuted():
    _, data = make_instance(8, 3, 200, 1, seed=5)
    U = data.U_true.copy()
    U[:, 1] = 2.5 * U[:, 0]
    p = normalize_pair(data.X, U)
    # v along e_0 - e_1 cancels the duplicated pair: Omega = 0 < ||v||_2
    v = np.array([1.0, -1.0, 0.0]) / np.sqrt(2)
    assert omega(p, v).value <= 1e-9
    rep = check_persistent_scattering(p, num_samples=50, seed=0)
    assert rep.overall == "refuted"
    assert not rep.c1_pass


def test_dense_short_data_not_certified():
    _, data = make_instance(10, 5, 40, 5, seed=2)
    rep = check_persistent_scattering(normalize_pair(data.X, data.U_true), num_samples=100)
    assert rep.overall in ("refuted", "inconclusive")


def test_report_deterministic_and_serializable(small_instance):
    _, data = small_instance
    p = normalize_pair(data.X, data.U_true)
    a = check_persistent_scattering(p, num_samples=30, seed=4)
    b = check_persistent_scattering(p, num_samples=30, seed=4)
    assert a.to_dict() == b.to_dict()
    d = a.to_dict()
    assert set(d) >= {"overall", "c1", "c2", "c3", "num_samples", "notes"}
    assert any("sampled" in note for note in d["notes"])
