"""Tests for the coupled human-limb rate map."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from superlimb.errors import DimensionMismatch, Singular, ValidationError
from superlimb.kinematics import (
    ROTATIONAL,
    TRANSLATIONAL,
    CoupledConfig,
    CoupledJacobian,
    DofPartition,
    PlantEndpointMap,
    coupled_jacobian,
    desired_joint_positions,
    desired_joint_rates,
    singularity_guard,
)
from superlimb.numerics import finite_diff_jacobian, svd_pinv


def make_config(rng, n_s1=2, n_s2=1, n_h1=2, n_h2=1):
    n_s, n_h = n_s1 + n_s2, n_h1 + n_h2
    part = DofPartition(
        s1=tuple(range(n_s1)), s2=tuple(range(n_s1, n_s)),
        h1=tuple(range(n_h1)), h2=tuple(range(n_h1, n_h)),
    )
    k = rng.uniform(0.5, 2.0, (n_h2, n_s2)) * np.eye(n_h2, n_s2) if n_h2 else np.zeros((0, 0))
    return CoupledConfig(
        q_s=rng.standard_normal(n_s), q_h=rng.standard_normal(n_h),
        partition=part, k_couple=k,
        s_types=(ROTATIONAL,) * n_s, h_types=(ROTATIONAL,) * n_h,
    )


def test_partition_must_cover_all_dofs():
    part = DofPartition(s1=(0,), s2=(0,), h1=(0,), h2=())  # 0 repeated
    with pytest.raises(ValidationError):
        part.validate(2, 1)


def test_type_tags_enforced(rng):
    part = DofPartition(s1=(0,), s2=(1,), h1=(0,), h2=(1,))
    with pytest.raises(ValidationError):
        CoupledConfig(
            q_s=np.zeros(2), q_h=np.zeros(2), partition=part,
            k_couple=np.array([[2.0]]),
            s_types=(ROTATIONAL, TRANSLATIONAL),
            h_types=(ROTATIONAL, ROTATIONAL),  # rotational tied to translational
        )


def test_coupling_must_be_square_pairing():
    part = DofPartition(s1=(0,), s2=(1, 2), h1=(0,), h2=(1,))
    with pytest.raises(DimensionMismatch):
        CoupledConfig(
            q_s=np.zeros(3), q_h=np.zeros(2), partition=part,
            k_couple=np.array([[1.0, 0.5]]),
            s_types=(ROTATIONAL,) * 3, h_types=(ROTATIONAL,) * 2,
        )


def test_block_offdiagonals_exactly_zero(rng):
    j = CoupledJacobian(j_hat=rng.standard_normal((2, 3)), k_couple=np.eye(2) * 1.5)
    b = j.block
    assert b.shape == (4, 5)
    np.testing.assert_array_equal(b[:2, 3:], np.zeros((2, 2)))
    np.testing.assert_array_equal(b[2:, :3], np.zeros((2, 3)))


# --- rate solve ------------------------------------------------------------


@pytest.mark.parametrize("seed", range(6))
def test_round_trip_square(seed):
    rng = np.random.default_rng(seed)
    j_hat = rng.standard_normal((2, 2)) + 2.0 * np.eye(2)
    k = np.diag(rng.uniform(0.5, 2.0, 2))
    j = CoupledJacobian(j_hat=j_hat, k_couple=k)
    qdot_h = rng.standard_normal(4)
    rates = desired_joint_rates(j, qdot_h)
    assert np.max(np.abs(j.block @ rates - qdot_h)) <= 1e-9


@pytest.mark.parametrize("seed", range(6))
def test_round_trip_wide_minimum_norm(seed):
    rng = np.random.default_rng(100 + seed)
    j_hat = rng.standard_normal((2, 4))  # two spare limb joints
    k = np.array([[1.3]])
    j = CoupledJacobian(j_hat=j_hat, k_couple=k)
    qdot_h = rng.standard_normal(3)
    rates = desired_joint_rates(j, qdot_h)
    assert np.max(np.abs(j.block @ rates - qdot_h)) <= 1e-9
    # block-diagonal inverse coincides with the pseudo-inverse of the block
    expected = svd_pinv(j.block) @ qdot_h
    np.testing.assert_allclose(rates, expected, atol=1e-9)


def test_coupling_rates_exact(rng):
    j = CoupledJacobian(j_hat=np.eye(2), k_couple=np.array([[2.0]]))
    qdot_h = np.array([0.1, -0.2, 0.5])
    rates = desired_joint_rates(j, qdot_h)
    # h2 rate = K * s2 rate, exactly
    assert 2.0 * rates[2] == qdot_h[2]


def test_fewer_limb_than_human_joints_rejected():
    j = CoupledJacobian(j_hat=np.ones((2, 1)), k_couple=np.zeros((0, 0)))
    with pytest.raises(DimensionMismatch):
        desired_joint_rates(j, np.zeros(2))


def test_singularity_guard():
    j = CoupledJacobian(j_hat=np.array([[1.0, 0.0], [0.0, 1e-9]]),
                        k_couple=np.zeros((0, 0)))
    with pytest.raises(Singular) as ei:
        singularity_guard(j, cond_max=1e6)
    assert ei.value.cond > 1e6
    ok = CoupledJacobian(j_hat=np.eye(2), k_couple=np.zeros((0, 0)))
    assert singularity_guard(ok) == pytest.approx(1.0)


def test_desired_joint_positions_is_euler_step(rng):
    j = CoupledJacobian(j_hat=2.0 * np.eye(2), k_couple=np.zeros((0, 0)))
    qdot_h = np.array([0.4, -0.6])
    q_s = np.array([1.0, 2.0])
    q_next = desired_joint_positions(j, qdot_h, q_s, dt=0.01)
    np.testing.assert_allclose(q_next, q_s + 0.01 * np.array([0.2, -0.3]))
    with pytest.raises(ValidationError):
        desired_joint_positions(j, qdot_h, q_s, dt=0.0)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 99999))
def test_round_trip_property(seed):
    rng = np.random.default_rng(seed)
    n_h1 = int(rng.integers(1, 4))
    n_s1 = n_h1 + int(rng.integers(0, 3))
    j_hat = rng.standard_normal((n_h1, n_s1))
    if np.linalg.cond(np.atleast_2d(j_hat @ j_hat.T)) > 1e5:
        return  # skip near-singular draws
    j = CoupledJacobian(j_hat=j_hat, k_couple=np.array([[1.7]]))
    qdot_h = rng.standard_normal(n_h1 + 1)
    rates = desired_joint_rates(j, qdot_h)
    assert np.max(np.abs(j.block @ rates - qdot_h)) <= 1e-8


# --- coupled_jacobian over a plant-backed map -------------------------------


def test_plant_endpoint_map_jacobian_matches_finite_difference(desk_model, rng):
    fk = PlantEndpointMap(desk_model, "arm", components=("x", "z"))
    for _ in range(5):
        q_chain = desk_model.q0[:3] + rng.uniform(-0.3, 0.3, 3)
        jac = fk.jacobian(q_chain)
        jac_fd = finite_diff_jacobian(fk, q_chain)
        assert np.max(np.abs(jac - jac_fd)) <= 1e-6


def test_plant_endpoint_map_unknown_component(desk_model):
    with pytest.raises(ValidationError):
        PlantEndpointMap(desk_model, "arm", components=("x", "y"))


def test_coupled_jacobian_uses_analytic_when_available(desk_model, rng):
    fk = PlantEndpointMap(desk_model, "arm", components=("x", "z"))
    part = DofPartition(s1=(0, 1, 2), s2=(), h1=(0, 1), h2=())
    config = CoupledConfig(
        q_s=desk_model.q0[:3], q_h=fk(desk_model.q0[:3]),
        partition=part, k_couple=np.zeros((0, 0)),
        s_types=(ROTATIONAL,) * 3, h_types=(TRANSLATIONAL,) * 2,
    )
    j = coupled_jacobian(config, fk)
    np.testing.assert_array_equal(j.j_hat, fk.jacobian(desk_model.q0[:3]))
    # wide case: 3 limb joints driving 2 endpoint coordinates
    rates = desired_joint_rates(j, np.array([0.01, -0.02]))
    assert np.max(np.abs(j.j_hat @ rates - [0.01, -0.02])) <= 1e-9
