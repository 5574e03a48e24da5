"""Planar rigid-body plant: serial chains of revolute/prismatic joints.

The plant is a set of independent serial chains in a vertical plane
(x horizontal, z up).  Each joint carries one link described by its mass,
length, centre-of-mass offset, an optional rotational inertia about the
CoM and a reflected rotor inertia.  Generalized coordinates concatenate
the chains in declaration order; limb ("srl") chains must come before
human chains so q = [q_srl, q_human].

All kinematic quantities (positions, Jacobians, velocity products) are
computed from one analytic forward pass, so the inertia matrix, the
Coriolis/gravity bias and point Jacobians are exact up to roundoff.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import cos, sin

import numpy as np

from .errors import BadModel, DimensionMismatch

REVOLUTE = "revolute"
PRISMATIC = "prismatic"

ROLE_SRL = "srl"
ROLE_HUMAN = "human"


@dataclass(frozen=True)
class Joint:
    """One joint plus the link it carries.

    length   structural link length (revolute moment arm; prismatic offset)
    com      CoM offset along the link/axis measured from the joint origin
    inertia  rotational inertia about the link CoM
    rotor    reflected actuator inertia added to the joint's diagonal
    axis     prismatic only: direction angle relative to the carrying frame
    q0       rest/initial value of the joint coordinate
    """

    kind: str
    mass: float
    length: float
    com: float
    inertia: float = 0.0
    rotor: float = 0.0
    axis: float = 0.0
    q0: float = 0.0

    def __post_init__(self):
        if self.kind not in (REVOLUTE, PRISMATIC):
            raise BadModel(f"unknown joint kind {self.kind!r}")
        if not (self.mass > 0.0) or not np.isfinite(self.mass):
            raise BadModel(f"mass must be positive, got {self.mass}")
        if self.kind == REVOLUTE and not (self.length > 0.0):
            raise BadModel(f"revolute link length must be positive, got {self.length}")
        if self.kind == PRISMATIC and self.length < 0.0:
            raise BadModel(f"prismatic offset must be >= 0, got {self.length}")
        if self.inertia < 0.0 or self.rotor < 0.0:
            raise BadModel("inertia and rotor must be >= 0")
        for name in ("length", "com", "inertia", "rotor", "axis", "q0"):
            if not np.isfinite(getattr(self, name)):
                raise BadModel(f"{name} must be finite")


@dataclass(frozen=True)
class Chain:
    name: str
    joints: tuple[Joint, ...]
    base: tuple[float, float] = (0.0, 0.0)
    heading: float = 0.0
    role: str = ROLE_SRL

    def __post_init__(self):
        if self.role not in (ROLE_SRL, ROLE_HUMAN):
            raise BadModel(f"unknown chain role {self.role!r}")
        if not self.joints:
            raise BadModel(f"chain {self.name!r} has no joints")
        object.__setattr__(self, "joints", tuple(self.joints))
        object.__setattr__(self, "base", (float(self.base[0]), float(self.base[1])))


@dataclass(frozen=True)
class PlantModel:
    chains: tuple[Chain, ...]
    gravity: float = 9.81

    def __post_init__(self):
        object.__setattr__(self, "chains", tuple(self.chains))
        if not self.chains:
            raise BadModel("plant needs at least one chain")
        names = [c.name for c in self.chains]
        if len(set(names)) != len(names):
            raise BadModel(f"duplicate chain names: {names}")
        seen_human = False
        for c in self.chains:
            if c.role == ROLE_HUMAN:
                seen_human = True
            elif seen_human:
                raise BadModel("limb chains must be declared before human chains")
        if self.gravity < 0.0 or not np.isfinite(self.gravity):
            raise BadModel(f"gravity must be >= 0, got {self.gravity}")

    # --- DoF bookkeeping -------------------------------------------------

    @property
    def n_dof(self) -> int:
        return sum(len(c.joints) for c in self.chains)

    def chain_slice(self, name: str) -> slice:
        off = 0
        for c in self.chains:
            n = len(c.joints)
            if c.name == name:
                return slice(off, off + n)
            off += n
        raise BadModel(f"no chain named {name!r}")

    def _role_indices(self, role: str) -> np.ndarray:
        idx, off = [], 0
        for c in self.chains:
            n = len(c.joints)
            if c.role == role:
                idx.extend(range(off, off + n))
            off += n
        return np.array(idx, dtype=int)

    @property
    def srl_indices(self) -> np.ndarray:
        return self._role_indices(ROLE_SRL)

    @property
    def human_indices(self) -> np.ndarray:
        return self._role_indices(ROLE_HUMAN)

    @property
    def q0(self) -> np.ndarray:
        return np.array([j.q0 for c in self.chains for j in c.joints])

    def state(self, q, qd=None) -> "PlantState":
        return PlantState(self, q, qd)


@dataclass(frozen=True)
class PointKinematics:
    """Kinematics of one material point: position, Jacobian and, when the
    plant state carries velocities, the point velocity and the velocity-
    product acceleration (the acceleration the point would have with
    qdd = 0)."""

    pos: np.ndarray
    jac: np.ndarray
    vel: np.ndarray | None = None
    acc_bias: np.ndarray | None = None


class _LinkFrame:
    __slots__ = (
        "kind", "joint", "global_index", "chain_start", "local_index",
        "pivot", "direction", "com", "com_vel", "com_acc", "tip", "tip_vel",
        "tip_acc", "ang_vel",
    )


class PlantState:
    """One forward pass over all chains at a given (q, qd).

    Caches per-link frames so the inertia matrix, bias vector, energies and
    point Jacobians share a single kinematic evaluation.
    """

    def __init__(self, model: PlantModel, q, qd=None):
        self.model = model
        self.q = np.asarray(q, dtype=float)
        if self.q.shape != (model.n_dof,):
            raise DimensionMismatch(
                f"q must have shape ({model.n_dof},), got {self.q.shape}"
            )
        self.has_vel = qd is not None
        self.qd = (
            np.asarray(qd, dtype=float) if qd is not None else np.zeros(model.n_dof)
        )
        if self.qd.shape != (model.n_dof,):
            raise DimensionMismatch(
                f"qd must have shape ({model.n_dof},), got {self.qd.shape}"
            )
        self._links: list[_LinkFrame] = []
        self._forward()
        self._mass: np.ndarray | None = None

    # --- forward pass ------------------------------------------------------

    def _forward(self):
        off = 0
        for chain in self.model.chains:
            ox, oz = chain.base
            vox = voz = aox = aoz = 0.0
            phi = chain.heading
            phid = 0.0
            for local, joint in enumerate(chain.joints):
                g = off + local
                qj = self.q[g]
                qdj = self.qd[g]
                lf = _LinkFrame()
                lf.kind = joint.kind
                lf.joint = joint
                lf.global_index = g
                lf.chain_start = off
                lf.local_index = local
                if joint.kind == REVOLUTE:
                    phi += qj
                    phid += qdj
                    ux, uz = cos(phi), sin(phi)
                    px, pz = -uz, ux  # perp(u)
                    lf.pivot = (ox, oz)
                    lf.direction = None
                    c = joint.com
                    lf.com = (ox + c * ux, oz + c * uz)
                    lf.com_vel = (vox + c * phid * px, voz + c * phid * pz)
                    lf.com_acc = (aox - c * phid * phid * ux,
                                  aoz - c * phid * phid * uz)
                    L = joint.length
                    ox, oz = ox + L * ux, oz + L * uz
                    vox, voz = vox + L * phid * px, voz + L * phid * pz
                    aox, aoz = aox - L * phid * phid * ux, aoz - L * phid * phid * uz
                else:  # prismatic
                    a = phi + joint.axis
                    dx, dz = cos(a), sin(a)
                    pdx, pdz = -dz, dx
                    lf.pivot = (ox, oz)
                    lf.direction = (dx, dz)
                    r = joint.com + qj
                    lf.com = (ox + r * dx, oz + r * dz)
                    lf.com_vel = (
                        vox + qdj * dx + r * phid * pdx,
                        voz + qdj * dz + r * phid * pdz,
                    )
                    lf.com_acc = (
                        aox + 2.0 * qdj * phid * pdx - r * phid * phid * dx,
                        aoz + 2.0 * qdj * phid * pdz - r * phid * phid * dz,
                    )
                    s = joint.length + qj
                    ox, oz = ox + s * dx, oz + s * dz
                    vox, voz = (
                        vox + qdj * dx + s * phid * pdx,
                        voz + qdj * dz + s * phid * pdz,
                    )
                    aox, aoz = (
                        aox + 2.0 * qdj * phid * pdx - s * phid * phid * dx,
                        aoz + 2.0 * qdj * phid * pdz - s * phid * phid * dz,
                    )
                lf.tip = (ox, oz)
                lf.tip_vel = (vox, voz)
                lf.tip_acc = (aox, aoz)
                lf.ang_vel = phid
                self._links.append(lf)
            off += len(chain.joints)

    # --- Jacobians ----------------------------------------------------------

    def _point_jacobian(self, link: _LinkFrame, pos: tuple[float, float]) -> np.ndarray:
        jac = np.zeros((2, self.model.n_dof))
        px, pz = pos
        for lf in self._links[link.chain_start: link.global_index + 1]:
            g = lf.global_index
            if lf.kind == REVOLUTE:
                rx, rz = px - lf.pivot[0], pz - lf.pivot[1]
                jac[0, g] = -rz
                jac[1, g] = rx
            else:
                jac[0, g], jac[1, g] = lf.direction
        return jac

    def _angular_row(self, link: _LinkFrame) -> np.ndarray:
        row = np.zeros(self.model.n_dof)
        for lf in self._links[link.chain_start: link.global_index + 1]:
            if lf.kind == REVOLUTE:
                row[lf.global_index] = 1.0
        return row

    def _find_link(self, chain: str, joint: int | None) -> _LinkFrame:
        sl = self.model.chain_slice(chain)
        n = sl.stop - sl.start
        local = n - 1 if joint is None else joint
        if not (0 <= local < n):
            raise BadModel(f"chain {chain!r} has no joint index {local}")
        return self._links[sl.start + local]

    def point(self, chain: str, joint: int | None = None, at: str = "tip") -> PointKinematics:
        """Kinematics of a link tip or CoM.  ``joint=None`` means the last
        link of the chain (the end effector)."""
        lf = self._find_link(chain, joint)
        if at == "tip":
            pos, vel, acc = lf.tip, lf.tip_vel, lf.tip_acc
        elif at == "com":
            pos, vel, acc = lf.com, lf.com_vel, lf.com_acc
        else:
            raise BadModel(f"unknown point spec {at!r}")
        return PointKinematics(
            pos=np.array(pos),
            jac=self._point_jacobian(lf, pos),
            vel=np.array(vel) if self.has_vel else None,
            acc_bias=np.array(acc) if self.has_vel else None,
        )

    # --- dynamics -------------------------------------------------------------

    def mass_matrix(self) -> np.ndarray:
        if self._mass is not None:
            return self._mass
        n = self.model.n_dof
        a = np.zeros((n, n))
        for lf in self._links:
            j = self._point_jacobian(lf, lf.com)
            a += lf.joint.mass * (j.T @ j)
            if lf.joint.inertia:
                w = self._angular_row(lf)
                a += lf.joint.inertia * np.outer(w, w)
            if lf.joint.rotor:
                a[lf.global_index, lf.global_index] += lf.joint.rotor
        self._mass = 0.5 * (a + a.T)
        return self._mass

    def gravity_vector(self) -> np.ndarray:
        """Generalized gravity force dV/dq (V = sum of m g z_com)."""
        g = np.zeros(self.model.n_dof)
        gz = self.model.gravity
        for lf in self._links:
            j = self._point_jacobian(lf, lf.com)
            g += lf.joint.mass * gz * j[1, :]
        return g

    def bias(self) -> np.ndarray:
        """Coriolis/centrifugal plus gravity bias h(q, qd).

        Equals the generalized force required to hold qdd = 0, so
        A qdd + h = tau is the full equation of motion.
        """
        h = self.gravity_vector()
        if self.has_vel:
            for lf in self._links:
                j = self._point_jacobian(lf, lf.com)
                h += lf.joint.mass * (j.T @ np.array(lf.com_acc))
        return h

    # --- energies (link-wise, independent of mass_matrix) ---------------------

    def kinetic_energy(self) -> float:
        t = 0.0
        for lf in self._links:
            vx, vz = lf.com_vel
            t += 0.5 * lf.joint.mass * (vx * vx + vz * vz)
            t += 0.5 * lf.joint.inertia * lf.ang_vel * lf.ang_vel
            t += 0.5 * lf.joint.rotor * self.qd[lf.global_index] ** 2
        return t

    def potential_energy(self) -> float:
        return sum(
            lf.joint.mass * self.model.gravity * lf.com[1] for lf in self._links
        )
