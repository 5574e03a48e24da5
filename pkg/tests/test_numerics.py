"""Tests for the dense linear-algebra kernels."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from superlimb.errors import (
    DimensionMismatch,
    NonFinite,
    NotSymmetric,
    RankDeficient,
    SingularWeight,
)
from superlimb.numerics import (
    dyn_consistent_pinv,
    finite_diff_hessian,
    finite_diff_jacobian,
    psd_check,
    qr_full,
    svd_pinv,
)


def random_spd(rng, n):
    g = rng.standard_normal((n, n))
    return g @ g.T + n * np.eye(n)


# --- qr_full -------------------------------------------------------------


@pytest.mark.parametrize("n,k", [(1, 1), (3, 1), (4, 2), (6, 3), (8, 8)])
def test_qr_full_reconstructs(rng, n, k):
    m = rng.standard_normal((n, k))
    fact = qr_full(m)
    assert fact.q.shape == (n, n)
    assert fact.r.shape == (k, k)
    assert np.max(np.abs(fact.q.T @ fact.q - np.eye(n))) <= 1e-10
    rebuilt = fact.q[:, :k] @ fact.r
    assert np.max(np.abs(rebuilt - m)) <= 1e-10 * (1.0 + np.max(np.abs(m)))


def test_qr_full_sign_convention_makes_factorization_unique(rng):
    m = rng.standard_normal((5, 3))
    f1 = qr_full(m)
    f2 = qr_full(m.copy())
    assert np.all(np.diag(f1.r) >= 0.0)
    np.testing.assert_array_equal(f1.q, f2.q)
    np.testing.assert_array_equal(f1.r, f2.r)
    # strictly triangular below the diagonal
    assert np.max(np.abs(np.tril(f1.r, -1))) <= 1e-12


def test_qr_full_rejects_rank_deficient():
    m = np.ones((4, 2))  # two identical columns
    with pytest.raises(RankDeficient):
        qr_full(m)


def test_qr_full_rejects_wide_and_nonfinite():
    with pytest.raises(DimensionMismatch):
        qr_full(np.ones((2, 3)))
    with pytest.raises(NonFinite):
        qr_full(np.array([[1.0], [np.nan]]))


# --- svd_pinv ------------------------------------------------------------


def random_fixed_rank(rng, n, k, rank):
    if rank == 0:
        return np.zeros((n, k))
    u = np.linalg.qr(rng.standard_normal((n, rank)))[0]
    v = np.linalg.qr(rng.standard_normal((k, rank)))[0]
    s = rng.uniform(0.5, 3.0, rank)
    return u @ np.diag(s) @ v.T


def penrose_max_err(m, p):
    scale = 1.0 + np.max(np.abs(m))
    return max(
        np.max(np.abs(m @ p @ m - m)) / scale,
        np.max(np.abs(p @ m @ p - p)) / scale,
        np.max(np.abs((m @ p) - (m @ p).T)) / scale,
        np.max(np.abs((p @ m) - (p @ m).T)) / scale,
    )


@pytest.mark.parametrize("n,k", [(3, 3), (5, 2), (2, 5), (6, 6), (4, 7)])
def test_svd_pinv_penrose_all_ranks(rng, n, k):
    for rank in range(min(n, k) + 1):
        m = random_fixed_rank(rng, n, k, rank)
        p = svd_pinv(m)
        assert p.shape == (k, n)
        assert penrose_max_err(m, p) <= 1e-9


def test_svd_pinv_zero_matrix_maps_to_zero():
    p = svd_pinv(np.zeros((3, 5)))
    np.testing.assert_array_equal(p, np.zeros((5, 3)))


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 6), st.integers(1, 6), st.integers(0, 12345))
def test_svd_pinv_penrose_property(n, k, seed):
    rng = np.random.default_rng(seed)
    m = random_fixed_rank(rng, n, k, rng.integers(0, min(n, k) + 1))
    assert penrose_max_err(m, svd_pinv(m)) <= 1e-9


# --- dyn_consistent_pinv --------------------------------------------------


@pytest.mark.parametrize("k,n", [(1, 2), (2, 4), (3, 6), (5, 5)])
def test_dyn_consistent_pinv_is_right_inverse(rng, k, n):
    w = rng.standard_normal((k, n))
    a = random_spd(rng, n)
    x = dyn_consistent_pinv(w, a)
    assert np.max(np.abs(w @ x - np.eye(k))) <= 1e-9


def test_dyn_consistent_pinv_range_a_orthogonal_to_nullspace(rng):
    # among all right inverses, the weighted one maps onto the A-orthogonal
    # complement of null(w): columns of X satisfy z' A x = 0 for w z = 0
    w = rng.standard_normal((2, 5))
    a = random_spd(rng, 5)
    x = dyn_consistent_pinv(w, a)
    _, _, vt = np.linalg.svd(w)
    null_basis = vt[2:, :].T  # 3 null directions
    assert np.max(np.abs(null_basis.T @ a @ x)) <= 1e-9


def test_dyn_consistent_pinv_rejects_bad_weight(rng):
    w = rng.standard_normal((2, 3))
    with pytest.raises(SingularWeight):
        dyn_consistent_pinv(w, -np.eye(3))  # negative definite
    asym = np.eye(3)
    asym[0, 1] = 0.5
    with pytest.raises(SingularWeight):
        dyn_consistent_pinv(w, asym)


def test_dyn_consistent_pinv_rejects_row_rank_loss():
    w = np.array([[1.0, 0.0], [2.0, 0.0]])  # dependent rows
    with pytest.raises(RankDeficient):
        dyn_consistent_pinv(w, np.eye(2))


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 4), st.integers(0, 99999))
def test_dyn_consistent_pinv_property(k, seed):
    rng = np.random.default_rng(seed)
    n = k + int(rng.integers(0, 4))
    w = rng.standard_normal((k, n))
    a = random_spd(rng, n)
    x = dyn_consistent_pinv(w, a)
    assert np.max(np.abs(w @ x - np.eye(k))) <= 1e-9


# --- finite differences -----------------------------------------------------


def test_finite_diff_jacobian_matches_linear_map(rng):
    a = rng.standard_normal((3, 4))
    b = rng.standard_normal(3)
    jac = finite_diff_jacobian(lambda p: a @ p + b, rng.standard_normal(4))
    assert np.max(np.abs(jac - a)) <= 1e-8


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_finite_diff_hessian_matches_quadratic(seed):
    rng = np.random.default_rng(seed)
    n = 4
    h = random_spd(rng, n)
    g = rng.standard_normal(n)

    def f(p):
        return 0.5 * p @ h @ p + g @ p - 1.7

    hess = finite_diff_hessian(f, rng.standard_normal(n))
    assert np.max(np.abs(hess - h)) <= 1e-6 * (1.0 + np.max(np.abs(h)))


def test_finite_diff_hessian_is_symmetric(rng):
    def f(p):
        return float(np.sin(p[0]) * np.exp(p[1]) + p[0] * p[1] ** 2)

    hess = finite_diff_hessian(f, np.array([0.3, -0.2]))
    np.testing.assert_array_equal(hess, hess.T)


def test_finite_diff_nonfinite_function_raises():
    with pytest.raises(NonFinite):
        finite_diff_hessian(lambda p: float("nan"), np.zeros(2))


# --- psd_check ----------------------------------------------------------------


@pytest.mark.parametrize("seed", range(5))
def test_psd_check_agrees_with_brute_force(seed):
    rng = np.random.default_rng(seed)
    n = 5
    # random symmetric with mixed spectrum
    q = np.linalg.qr(rng.standard_normal((n, n)))[0]
    eigs = rng.uniform(-1.0, 2.0, n)
    m = q @ np.diag(eigs) @ q.T
    tol = 1e-9 * max(1.0, np.max(np.abs(m)))
    verdict, min_eig = psd_check(m, tol)
    vs = rng.standard_normal((1000, n))
    vs /= np.linalg.norm(vs, axis=1, keepdims=True)
    brute = np.min(np.einsum("ij,jk,ik->i", vs, m, vs))
    # sampled minimum upper-bounds the true min eigenvalue
    assert brute >= min_eig - 1e-12
    if not verdict:
        assert min_eig < -tol


def test_psd_check_rejects_asymmetric():
    m = np.array([[1.0, 0.5], [0.0, 1.0]])
    with pytest.raises(NotSymmetric):
        psd_check(m, 1e-9)


def test_psd_check_identity():
    ok, min_eig = psd_check(np.eye(3), 0.0)
    assert ok and min_eig == pytest.approx(1.0)
