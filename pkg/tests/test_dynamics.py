"""Tests for the torque / support-force decoupling."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from superlimb.dynamics import (
    ContactSpec,
    DynamicsSnapshot,
    constraint_force,
    contact_jacobian,
    decouple,
    null_projection,
    plant_dynamics,
    selection_matrices,
)
from superlimb.errors import DimensionMismatch, NonFinite
from superlimb.numerics import qr_full


def random_snapshot(rng, n, k):
    g = rng.standard_normal((n, n))
    a = g @ g.T + n * np.eye(n)
    j_c = rng.standard_normal((k, n))
    return DynamicsSnapshot(
        a=a, h_bias=rng.standard_normal(n), j_c=j_c, qdd=rng.standard_normal(n)
    )


def test_snapshot_validation(rng):
    a = np.eye(3)
    with pytest.raises(DimensionMismatch):
        DynamicsSnapshot(a=a, h_bias=np.zeros(2), j_c=np.ones((1, 3)), qdd=np.zeros(3))
    asym = np.eye(3)
    asym[0, 1] = 0.1
    with pytest.raises(DimensionMismatch):
        DynamicsSnapshot(a=asym, h_bias=np.zeros(3), j_c=np.ones((1, 3)), qdd=np.zeros(3))
    with pytest.raises(NonFinite):
        DynamicsSnapshot(a=a, h_bias=np.array([np.inf, 0, 0]),
                         j_c=np.ones((1, 3)), qdd=np.zeros(3))
    with pytest.raises(DimensionMismatch):
        DynamicsSnapshot(a=a, h_bias=np.zeros(3), j_c=np.ones((4, 3)), qdd=np.zeros(3))


def test_selection_matrices():
    s_k, s_kc = selection_matrices(2, 5)
    assert s_k.shape == (2, 5) and s_kc.shape == (3, 5)
    np.testing.assert_array_equal(s_k @ np.arange(5.0), [0.0, 1.0])
    np.testing.assert_array_equal(s_kc @ np.arange(5.0), [2.0, 3.0, 4.0])


@pytest.mark.parametrize("n,k", [(2, 1), (4, 1), (4, 3), (6, 2), (5, 5)])
def test_decouple_reconstruction(rng, n, k):
    snap = random_snapshot(rng, n, k)
    sol = decouple(snap)
    b = snap.a @ snap.qdd + snap.h_bias
    resid = b - sol.tau - snap.j_c.T @ sol.lam
    bound = 1e-8 * (1.0 + np.max(np.abs(b)))
    assert np.max(np.abs(resid)) <= bound
    assert sol.residual_inf <= bound
    assert sol.lam.shape == (k,)


@pytest.mark.parametrize("n,k", [(3, 1), (5, 2), (6, 3)])
def test_decouple_constraint_split(rng, n, k):
    # the torque carries the entire unconstrained block of the equation
    snap = random_snapshot(rng, n, k)
    sol = decouple(snap)
    fact = qr_full(snap.j_c.T)
    _, s_kc = selection_matrices(k, n)
    w = s_kc @ fact.q.T
    b = snap.a @ snap.qdd + snap.h_bias
    assert np.max(np.abs(w @ sol.tau - w @ b)) <= 1e-9 * (1.0 + np.max(np.abs(b)))


@pytest.mark.parametrize("n,k", [(3, 1), (5, 2), (6, 3), (4, 4)])
def test_null_projection_properties(rng, n, k):
    snap = random_snapshot(rng, n, k)
    fact = qr_full(snap.j_c.T)
    _, s_kc = selection_matrices(k, n)
    w = s_kc @ fact.q.T
    n_kc = null_projection(w, snap.a)
    assert np.max(np.abs(n_kc @ n_kc - n_kc)) <= 1e-9
    if w.size:
        assert np.max(np.abs(w @ n_kc)) <= 1e-9
    else:
        np.testing.assert_array_equal(n_kc, np.eye(n))


def test_decouple_fully_constrained_puts_all_force_on_contact(rng):
    snap = random_snapshot(rng, 3, 3)
    sol = decouple(snap)
    np.testing.assert_array_equal(sol.tau, np.zeros(3))
    np.testing.assert_array_equal(sol.n_kc, np.eye(3))


def test_constraint_force_coincides_with_decouple(rng):
    # applying the torque decouple() chose must measure the same support
    # force it reported: the two expressions are algebraically identical
    for n, k in [(3, 1), (5, 2), (6, 3)]:
        snap = random_snapshot(rng, n, k)
        sol = decouple(snap)
        lam = constraint_force(snap, sol.tau)
        np.testing.assert_allclose(lam, sol.lam, atol=1e-9 * (1 + np.max(np.abs(sol.lam))))


def test_constraint_force_zero_torque(rng):
    snap = random_snapshot(rng, 4, 2)
    lam = constraint_force(snap, np.zeros(4))
    fact = qr_full(snap.j_c.T)
    b = snap.a @ snap.qdd + snap.h_bias
    expected = np.linalg.solve(fact.r, (fact.q.T @ b)[:2])
    np.testing.assert_allclose(lam, expected, atol=1e-10)


def test_constraint_force_shape_check(rng):
    snap = random_snapshot(rng, 4, 2)
    with pytest.raises(DimensionMismatch):
        constraint_force(snap, np.zeros(3))


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 8), st.integers(0, 99999))
def test_decouple_reconstruction_property(n, seed):
    rng = np.random.default_rng(seed)
    k = int(rng.integers(1, min(3, n - 1) + 1))
    snap = random_snapshot(rng, n, k)
    sol = decouple(snap)
    b = snap.a @ snap.qdd + snap.h_bias
    resid = b - sol.tau - snap.j_c.T @ sol.lam
    assert np.max(np.abs(resid)) <= 1e-8 * (1.0 + np.max(np.abs(b)))


# --- plant-facing helpers -------------------------------------------------------


def test_contact_spec_validation():
    with pytest.raises(DimensionMismatch):
        ContactSpec(chain="arm", directions=("x", "x"))
    with pytest.raises(DimensionMismatch):
        ContactSpec(chain="arm", directions=("y",))
    spec = ContactSpec(chain="arm", directions=("z", "x"))
    assert spec.rows == [1, 0]


def test_plant_dynamics_matches_state(desk_model, rng):
    q = rng.uniform(-0.5, 0.5, 4)
    qd = rng.standard_normal(4)
    a, h = plant_dynamics(desk_model, q, qd)
    st = desk_model.state(q, qd)
    np.testing.assert_array_equal(a, st.mass_matrix())
    np.testing.assert_array_equal(h, st.bias())


def test_contact_jacobian_rows(desk_model):
    spec = ContactSpec(chain="arm", directions=("z",))
    j = contact_jacobian(desk_model, desk_model.q0, spec)
    pk = desk_model.state(desk_model.q0).point("arm")
    np.testing.assert_array_equal(j, pk.jac[[1], :])


def test_decouple_on_the_desk_plant(desk_model):
    # equation of motion at a real configuration with a vertical support
    q = desk_model.q0
    qd = np.array([0.1, -0.2, 0.05, 0.02])
    a, h = plant_dynamics(desk_model, q, qd)
    spec = ContactSpec(chain="arm", directions=("z",))
    j_c = contact_jacobian(desk_model, q, spec)
    qdd = np.array([0.3, 0.1, -0.4, 0.0])
    snap = DynamicsSnapshot(a=a, h_bias=h, j_c=j_c, qdd=qdd)
    sol = decouple(snap)
    b = a @ qdd + h
    assert np.max(np.abs(b - sol.tau - j_c.T @ sol.lam)) <= 1e-8 * (1 + np.max(np.abs(b)))
