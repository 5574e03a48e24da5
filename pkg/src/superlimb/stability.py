"""Quasi-static stability certification for body-support postures.

A supported body at pose p is held by a joint-servo-controlled chain
(tau = tau_bar - K_q dq).  Near an equilibrium pose the total potential

    U(p) = m g z_c(p) - tau_bar . dq + 1/2 dq' K_q dq,   dq = q(p) - q_bar

has Hessian

    K_p = m g E_z + J' K_q J - sum_i tau_bar_i H_i

with E_z the Hessian of the CoM height, J = dq/dp and H_i the Hessian of
the i-th joint coordinate, all evaluated at the equilibrium pose.  The
posture is stable in the quasi-static sense iff K_p is positive
semidefinite.  This module assembles K_p term by term, certifies it
against the finite-difference Hessian of U (the two must agree at an
equilibrium), and can search for the minimal uniform servo stiffness that
renders an unstable posture stable.

The pose vector is treated generically (any dimension); the overhead
support postures used by the CLI are 6-dimensional (3 translations, 3
fixed-axis rotation angles, valid locally around the equilibrium).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import (
    DimensionMismatch,
    IkFailure,
    NotSymmetric,
    RankDeficient,
    SuperlimbError,
    Unachievable,
    ValidationError,
)
from .numerics import finite_diff_hessian, finite_diff_jacobian, psd_check

GRAVITY = 9.81
RESIDUAL_TOL = 1e-6
PSD_TOL_FACTOR = 1e-8
CROSSCHECK_RTOL = 1e-3
BISECTION_TOL = 1e-6
DEFAULT_ALPHA_MAX = 1e6


class DiagnosticMismatch(UserWarning):
    """Analytic stiffness assembly disagrees with the finite-difference
    Hessian of the potential beyond tolerance."""


@dataclass(frozen=True)
class SupportPosture:
    """Equilibrium posture of a supported body.

    ik_map sends a body pose to the support-chain joint vector; z_of_p
    sends a pose to the body CoM height.  Both only need to be evaluable
    in a neighborhood of p_bar.  An analytic Jacobian of ik_map may be
    supplied via ik_jac; otherwise finite differences are used.
    """

    p_bar: np.ndarray
    q_bar: np.ndarray
    tau_bar: np.ndarray
    k_q: np.ndarray
    mass: float
    ik_map: Callable[[np.ndarray], np.ndarray]
    z_of_p: Callable[[np.ndarray], float]
    ik_jac: Callable[[np.ndarray], np.ndarray] | None = None

    def __post_init__(self):
        p = np.atleast_1d(np.asarray(self.p_bar, dtype=float))
        q = np.atleast_1d(np.asarray(self.q_bar, dtype=float))
        tau = np.atleast_1d(np.asarray(self.tau_bar, dtype=float))
        kq = np.atleast_2d(np.asarray(self.k_q, dtype=float))
        if not (np.all(np.isfinite(p)) and np.all(np.isfinite(q)) and np.all(np.isfinite(tau))):
            raise ValidationError("posture vectors must be finite")
        if tau.shape != q.shape:
            raise DimensionMismatch("tau_bar must match q_bar")
        if kq.shape != (q.size, q.size):
            raise DimensionMismatch(
                f"k_q must be {q.size}x{q.size}, got {kq.shape}"
            )
        if not (self.mass > 0.0 and np.isfinite(self.mass)):
            raise ValidationError(f"mass must be > 0, got {self.mass}")
        asym = np.max(np.abs(kq - kq.T)) if kq.size else 0.0
        if asym > 1e-9 * max(1.0, np.max(np.abs(kq))):
            raise NotSymmetric("k_q must be symmetric")
        kq = 0.5 * (kq + kq.T)
        ok, min_eig = psd_check(kq, tol=1e-9 * max(1.0, np.max(np.abs(kq))))
        if not ok:
            raise ValidationError(f"k_q must be PSD (min eigenvalue {min_eig:g})")
        object.__setattr__(self, "p_bar", p)
        object.__setattr__(self, "q_bar", q)
        object.__setattr__(self, "tau_bar", tau)
        object.__setattr__(self, "k_q", kq)

    @property
    def n_pose(self) -> int:
        return self.p_bar.size

    @property
    def n_joint(self) -> int:
        return self.q_bar.size


@dataclass(frozen=True)
class StabilityReport:
    """PSD verdict on the assembled posture stiffness matrix."""

    k_p: np.ndarray
    eigenvalues: np.ndarray
    is_stable: bool
    margin: float
    diagnostic_mismatch: bool = False

    def __post_init__(self):
        k = np.atleast_2d(np.asarray(self.k_p, dtype=float))
        scale = max(np.max(np.abs(k)), 1e-30)
        if np.max(np.abs(k - k.T)) > 1e-6 * scale:
            raise NotSymmetric("k_p must be symmetric")
        ev = np.sort(np.atleast_1d(np.asarray(self.eigenvalues, dtype=float)))
        ref = np.linalg.eigvalsh(0.5 * (k + k.T))
        if np.max(np.abs(ev - ref)) > 1e-8 * max(1.0, scale):
            raise ValidationError("eigenvalues inconsistent with k_p")
        object.__setattr__(self, "k_p", k)
        object.__setattr__(self, "eigenvalues", ev)


def _ik(posture: SupportPosture, p: np.ndarray) -> np.ndarray:
    try:
        q = np.atleast_1d(np.asarray(posture.ik_map(p), dtype=float))
    except SuperlimbError:
        raise
    except Exception as exc:  # user closure blew up: report as an IK failure
        raise IkFailure(f"ik_map failed at p={np.asarray(p)}: {exc}") from exc
    if q.shape != posture.q_bar.shape:
        raise IkFailure(
            f"ik_map returned shape {q.shape}, expected {posture.q_bar.shape}"
        )
    return q


def _z(posture: SupportPosture, p: np.ndarray) -> float:
    z = float(posture.z_of_p(p))
    if not np.isfinite(z):
        raise IkFailure(f"z_of_p returned non-finite value at p={np.asarray(p)}")
    return z


def _ik_jacobian(posture: SupportPosture, p: np.ndarray) -> np.ndarray:
    if posture.ik_jac is not None:
        j = np.atleast_2d(np.asarray(posture.ik_jac(p), dtype=float))
    else:
        j = finite_diff_jacobian(lambda pp: _ik(posture, pp), p)
    if j.shape != (posture.n_joint, posture.n_pose):
        raise DimensionMismatch(
            f"ik Jacobian must be {(posture.n_joint, posture.n_pose)}, got {j.shape}"
        )
    return j


def equilibrium_residual(posture: SupportPosture, f_h: np.ndarray) -> np.ndarray:
    """Generalized-force balance at the equilibrium pose.

    Gravity enters as the generalized force of the height potential,
    -m g dz_c/dp, so a balanced posture (servo torques plus any human
    force carrying the weight) gives a zero vector.
    """
    fh = np.atleast_1d(np.asarray(f_h, dtype=float))
    if fh.shape != (posture.n_pose,):
        raise DimensionMismatch(
            f"f_h must have shape ({posture.n_pose},), got {fh.shape}"
        )
    p = posture.p_bar
    grad_z = finite_diff_jacobian(
        lambda pp: np.atleast_1d(_z(posture, pp)), p
    ).ravel()
    j = _ik_jacobian(posture, p)
    return -posture.mass * GRAVITY * grad_z + fh + j.T @ posture.tau_bar


def potential(posture: SupportPosture, p: np.ndarray) -> float:
    """Total potential of the supported body at pose p: gravity term, work
    of the constant torque offset, and the servo spring energy."""
    pv = np.atleast_1d(np.asarray(p, dtype=float))
    if pv.shape != (posture.n_pose,):
        raise DimensionMismatch(
            f"p must have shape ({posture.n_pose},), got {pv.shape}"
        )
    dq = _ik(posture, pv) - posture.q_bar
    return float(
        posture.mass * GRAVITY * _z(posture, pv)
        - posture.tau_bar @ dq
        + 0.5 * dq @ posture.k_q @ dq
    )


def hessian_ez(posture: SupportPosture, p: np.ndarray) -> np.ndarray:
    """Hessian of the CoM height with respect to the pose (symmetrized)."""
    return finite_diff_hessian(lambda pp: _z(posture, pp), np.asarray(p, dtype=float))


def hessian_qi(posture: SupportPosture, p: np.ndarray, i: int) -> np.ndarray:
    """Hessian of the i-th support joint coordinate with respect to the pose."""
    if not (0 <= i < posture.n_joint):
        raise DimensionMismatch(
            f"joint index {i} out of range for {posture.n_joint} joints"
        )
    return finite_diff_hessian(
        lambda pp: float(_ik(posture, pp)[i]), np.asarray(p, dtype=float)
    )


def _assemble_kp(posture: SupportPosture) -> np.ndarray:
    p = posture.p_bar
    e_z = hessian_ez(posture, p)
    j = _ik_jacobian(posture, p)
    k_p = posture.mass * GRAVITY * e_z + j.T @ posture.k_q @ j
    for i in range(posture.n_joint):
        ti = posture.tau_bar[i]
        if ti != 0.0:
            k_p = k_p - ti * hessian_qi(posture, p, i)
    return 0.5 * (k_p + k_p.T)


def stiffness_matrix_kp(posture: SupportPosture) -> StabilityReport:
    """Assemble the posture stiffness matrix and certify it.

    Requires the posture to actually be an equilibrium (residual below
    1e-6 N with no human force).  The analytic assembly is cross-checked
    against the finite-difference Hessian of the potential; disagreement
    beyond 0.1% relative raises a DiagnosticMismatch warning and flags the
    report, since at a true equilibrium the two are the same matrix.
    """
    res = equilibrium_residual(posture, np.zeros(posture.n_pose))
    res_inf = float(np.max(np.abs(res))) if res.size else 0.0
    if res_inf > RESIDUAL_TOL:
        raise ValidationError(
            f"posture is not an equilibrium (residual {res_inf:.3e} N)"
        )
    k_p = _assemble_kp(posture)
    fd = finite_diff_hessian(lambda pp: potential(posture, pp), posture.p_bar)
    denom = max(np.max(np.abs(k_p)), np.max(np.abs(fd)), 1e-30)
    mismatch = False
    if denom > 1e-9 and np.max(np.abs(k_p - fd)) / denom > CROSSCHECK_RTOL:
        mismatch = True
        warnings.warn(
            "assembled stiffness disagrees with the potential Hessian "
            f"(rel err {np.max(np.abs(k_p - fd)) / denom:.3e})",
            DiagnosticMismatch,
            stacklevel=2,
        )
    tol = PSD_TOL_FACTOR * np.max(np.abs(k_p)) if k_p.size else 0.0
    is_stable, min_eig = psd_check(k_p, tol=tol)
    eigs = np.linalg.eigvalsh(k_p)
    return StabilityReport(
        k_p=k_p,
        eigenvalues=eigs,
        is_stable=is_stable,
        margin=float(min_eig),
        diagnostic_mismatch=mismatch,
    )


def stabilizing_servo_stiffness(
    posture: SupportPosture,
    margin: float = 0.0,
    alpha_max: float = DEFAULT_ALPHA_MAX,
) -> float:
    """Minimal uniform servo stiffness rescue.

    Finds the smallest alpha such that replacing the servo stiffness by
    alpha*I makes the posture stiffness PSD with min eigenvalue >= margin.
    The min-eigenvalue of base + alpha J'J is nondecreasing in alpha, so a
    plain bisection converges; the returned value certifies the condition
    (it is the feasible end of the final bracket).
    """
    if margin < 0.0:
        raise ValidationError(f"margin must be >= 0, got {margin}")
    p = posture.p_bar
    e_z = hessian_ez(posture, p)
    j = _ik_jacobian(posture, p)
    base = posture.mass * GRAVITY * e_z
    for i in range(posture.n_joint):
        ti = posture.tau_bar[i]
        if ti != 0.0:
            base = base - ti * hessian_qi(posture, p, i)
    base = 0.5 * (base + base.T)
    jtj = j.T @ j
    scale = max(np.max(np.abs(jtj)), 1e-30)
    if np.linalg.eigvalsh(jtj)[0] < 1e-12 * scale:
        raise RankDeficient(
            "servo stiffness cannot act on all pose directions (J'J singular)"
        )

    def min_eig(alpha: float) -> float:
        return float(np.linalg.eigvalsh(base + alpha * jtj)[0])

    if min_eig(0.0) >= margin:
        return 0.0
    if min_eig(alpha_max) < margin:
        raise Unachievable(
            f"no alpha <= {alpha_max:g} reaches stability margin {margin:g}"
        )
    lo, hi = 0.0, alpha_max
    while hi - lo > BISECTION_TOL:
        mid = 0.5 * (lo + hi)
        if min_eig(mid) >= margin:
            hi = mid
        else:
            lo = mid
    return hi
