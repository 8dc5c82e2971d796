"""Floating-base rigid-body dynamics.

Generalized velocity convention: ``v = [xdot_base (world), omega_b (body),
qdot_j]``. The mass matrix comes from a composite-rigid-body pass over
world-frame spatial inertias, the bias vector from recursive Newton-Euler
with zero acceleration. Links are processed one tree depth at a time so each
pass is a handful of batched numpy operations.
"""

from __future__ import annotations

import weakref
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .robot_model import RobotModel


class DimensionMismatch(ValueError):
    pass


class SingularMass(ArithmeticError):
    pass


@dataclass
class GeneralizedState:
    """Configuration and velocity of the floating-base robot.

    ``base_pos`` is the world position of the base frame origin and ``R_b``
    the base orientation.
    """

    base_pos: np.ndarray
    R_b: np.ndarray
    q_j: np.ndarray
    v: np.ndarray

    @property
    def n(self) -> int:
        return self.q_j.shape[0]

    @property
    def base_lin_vel(self) -> np.ndarray:
        return self.v[:3]

    @property
    def omega_b(self) -> np.ndarray:
        return self.v[3:6]

    @property
    def qd_j(self) -> np.ndarray:
        return self.v[6:]

    def copy(self) -> "GeneralizedState":
        return GeneralizedState(
            self.base_pos.copy(), self.R_b.copy(), self.q_j.copy(), self.v.copy()
        )

    @classmethod
    def at_rest(cls, model: RobotModel, q_j=None, base_pos=None, R_b=None):
        q_j = model.q_nominal if q_j is None else np.asarray(q_j, dtype=float)
        return cls(
            np.zeros(3) if base_pos is None else np.asarray(base_pos, dtype=float),
            np.eye(3) if R_b is None else np.asarray(R_b, dtype=float),
            q_j.copy(),
            np.zeros(model.nv),
        )


@dataclass
class DynamicsTerms:
    M: np.ndarray
    h: np.ndarray
    J: np.ndarray
    Jdot_v: np.ndarray
    foot_pos: np.ndarray
    foot_vel: np.ndarray

    @property
    def nv(self) -> int:
        return self.M.shape[0]

    def foot_rows(self, i: int) -> slice:
        return slice(3 * i, 3 * i + 3)


def skew(w) -> np.ndarray:
    return np.array([[0.0, -w[2], w[1]], [w[2], 0.0, -w[0]], [-w[1], w[0], 0.0]])


def so3_exp(w) -> np.ndarray:
    """Rotation matrix exp([w]x)."""
    theta = np.sqrt(w @ w)
    K = skew(w)
    if theta < 1e-8:
        return np.eye(3) + K + 0.5 * K @ K
    return (
        np.eye(3)
        + np.sin(theta) / theta * K
        + (1.0 - np.cos(theta)) / theta**2 * K @ K
    )


def orthonormalize(R) -> np.ndarray:
    u, _, vt = np.linalg.svd(R)
    out = u @ vt
    if np.linalg.det(out) < 0:
        u[:, -1] *= -1
        out = u @ vt
    return out


def _cross(a, b):
    return np.stack(
        (
            a[..., 1] * b[..., 2] - a[..., 2] * b[..., 1],
            a[..., 2] * b[..., 0] - a[..., 0] * b[..., 2],
            a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0],
        ),
        axis=-1,
    )


def _axis_rotation(u, theta):
    """Batched Rodrigues rotation about unit axes ``u`` (k,3) by ``theta`` (k,)."""
    c = np.cos(theta)[:, None, None]
    s = np.sin(theta)[:, None, None]
    k = u.shape[0]
    K = np.zeros((k, 3, 3))
    K[:, 0, 1], K[:, 0, 2] = -u[:, 2], u[:, 1]
    K[:, 1, 0], K[:, 1, 2] = u[:, 2], -u[:, 0]
    K[:, 2, 0], K[:, 2, 1] = -u[:, 1], u[:, 0]
    uu = u[:, :, None] * u[:, None, :]
    return c * np.eye(3) + s * K + (1.0 - c) * uu


class _Topology:
    def __init__(self, model: RobotModel):
        links = model.links
        L = len(links)
        self.L = L
        self.n = L - 1
        self.parent = np.array([lk.parent for lk in links])
        self.xyz = np.array([lk.origin_xyz for lk in links])
        self.rot = np.array([lk.origin_rot for lk in links])
        self.axis = np.array([lk.axis for lk in links])
        self.mass = np.array([lk.mass for lk in links])
        self.com = np.array([lk.com for lk in links])
        self.inertia = np.array([lk.inertia for lk in links])
        depth = np.zeros(L, dtype=int)
        for i in range(1, L):
            depth[i] = depth[links[i].parent] + 1
        self.levels = [np.flatnonzero(depth == d) for d in range(1, depth.max() + 1)] if L > 1 else []
        # anc[a, b]: joint b is joint a or one of its ancestors
        anc = np.zeros((self.n, self.n), dtype=bool)
        for i in range(1, L):
            for j in model.chain(i):
                anc[i - 1, j] = True
        self.anc = anc
        self.foot_link = np.array([f.link for f in model.feet], dtype=int)
        self.foot_offset = np.array([f.offset for f in model.feet]).reshape(-1, 3)
        foot_anc = np.zeros((len(model.feet), self.n), dtype=bool)
        for k, f in enumerate(model.feet):
            foot_anc[k, model.chain(f.link)] = True
        self.foot_anc = foot_anc


_TOPOLOGY: "weakref.WeakKeyDictionary[RobotModel, _Topology]" = weakref.WeakKeyDictionary()


def _topology(model: RobotModel) -> _Topology:
    topo = _TOPOLOGY.get(model)
    if topo is None:
        topo = _Topology(model)
        _TOPOLOGY[model] = topo
    return topo


def _check(model: RobotModel, state: GeneralizedState):
    n = model.n_joints
    if state.q_j.shape != (n,) or state.v.shape != (n + 6,):
        raise DimensionMismatch(
            f"state has q_j {state.q_j.shape}, v {state.v.shape}; model needs n={n}"
        )
    if state.R_b.shape != (3, 3) or state.base_pos.shape != (3,):
        raise DimensionMismatch("base pose must be a 3-vector and a 3x3 rotation")


class _Pass:
    """Forward kinematic pass: poses, velocities and accelerations of all links."""

    def __init__(self, model, state, qdd=None, gravity=True):
        topo = _topology(model)
        L = topo.L
        self.topo = topo
        R = np.empty((L, 3, 3))
        p = np.empty((L, 3))
        ax = np.zeros((L, 3))
        w = np.empty((L, 3))
        v = np.empty((L, 3))
        al = np.empty((L, 3))
        a = np.empty((L, 3))
        qd = state.v[6:]
        R[0] = state.R_b
        p[0] = state.base_pos
        w[0] = state.R_b @ state.v[3:6]
        v[0] = state.v[:3]
        if qdd is None:
            al[0] = 0.0
            a[0] = 0.0
            qddj = np.zeros(topo.n)
        else:
            al[0] = state.R_b @ qdd[3:6]
            a[0] = qdd[:3]
            qddj = qdd[6:]
        if gravity:
            a[0] = a[0] - model.gravity
        for idx in topo.levels:
            P = topo.parent[idx]
            j = idx - 1
            Rp = R[P]
            Rf = Rp @ topo.rot[idx]
            p[idx] = p[P] + np.einsum("kij,kj->ki", Rp, topo.xyz[idx])
            u = np.einsum("kij,kj->ki", Rf, topo.axis[idx])
            ax[idx] = u
            R[idx] = Rf @ _axis_rotation(topo.axis[idx], state.q_j[j])
            uqd = u * qd[j][:, None]
            w[idx] = w[P] + uqd
            r = p[idx] - p[P]
            v[idx] = v[P] + _cross(w[P], r)
            al[idx] = al[P] + _cross(w[P], uqd) + u * qddj[j][:, None]
            a[idx] = a[P] + _cross(al[P], r) + _cross(w[P], _cross(w[P], r))
        self.R, self.p, self.ax, self.w, self.v, self.al, self.a = R, p, ax, w, v, al, a

    def generalized_forces(self, model) -> np.ndarray:
        """Backward Newton-Euler pass; returns M qdd + h for this pass."""
        topo = self.topo
        R, p, w, al, a = self.R, self.p, self.w, self.al, self.a
        c = np.einsum("lij,lj->li", R, topo.com)
        ac = a + _cross(al, c) + _cross(w, _cross(w, c))
        Iw = R @ topo.inertia @ np.transpose(R, (0, 2, 1))
        f = topo.mass[:, None] * ac
        n = (
            np.einsum("lij,lj->li", Iw, al)
            + _cross(w, np.einsum("lij,lj->li", Iw, w))
            + _cross(c, f)
        )
        out = np.empty(topo.n + 6)
        for idx in reversed(topo.levels):
            P = topo.parent[idx]
            out[6 + idx - 1] = np.einsum("ki,ki->k", self.ax[idx], n[idx])
            r = p[idx] - p[P]
            np.add.at(f, P, f[idx])
            np.add.at(n, P, n[idx] + _cross(r, f[idx]))
        out[:3] = f[0]
        out[3:6] = R[0].T @ n[0]
        return out

    def motion_subspace(self) -> np.ndarray:
        """World-frame Plucker columns [angular; linear at origin] for every dof."""
        topo = self.topo
        S = np.zeros((6, topo.n + 6))
        S[3:6, 0:3] = np.eye(3)
        Rb = self.R[0]
        S[0:3, 3:6] = Rb
        S[3:6, 3:6] = _cross(self.p[0][None, :], Rb.T).T
        u = self.ax[1:]
        S[0:3, 6:] = u.T
        S[3:6, 6:] = _cross(self.p[1:], u).T
        return S

    def spatial_inertias(self) -> np.ndarray:
        topo = self.topo
        R = self.R
        c = self.p + np.einsum("lij,lj->li", R, topo.com)
        Ic = R @ topo.inertia @ np.transpose(R, (0, 2, 1))
        m = topo.mass
        L = topo.L
        C = np.zeros((L, 3, 3))
        C[:, 0, 1], C[:, 0, 2] = -c[:, 2], c[:, 1]
        C[:, 1, 0], C[:, 1, 2] = c[:, 2], -c[:, 0]
        C[:, 2, 0], C[:, 2, 1] = -c[:, 1], c[:, 0]
        out = np.empty((L, 6, 6))
        out[:, :3, :3] = Ic + m[:, None, None] * C @ np.transpose(C, (0, 2, 1))
        out[:, :3, 3:] = m[:, None, None] * C
        out[:, 3:, :3] = m[:, None, None] * np.transpose(C, (0, 2, 1))
        out[:, 3:, 3:] = m[:, None, None] * np.eye(3)
        return out

    def feet(self):
        topo = self.topo
        lk = topo.foot_link
        off = np.einsum("kij,kj->ki", self.R[lk], topo.foot_offset)
        return lk, off


def inverse_dynamics(model: RobotModel, state: GeneralizedState, qdd) -> np.ndarray:
    """Generalized forces ``M qdd + h`` by recursive Newton-Euler."""
    _check(model, state)
    qdd = np.asarray(qdd, dtype=float)
    if qdd.shape != (model.nv,):
        raise DimensionMismatch(f"qdd must have length {model.nv}")
    return _Pass(model, state, qdd).generalized_forces(model)


def mass_matrix(model: RobotModel, state: GeneralizedState, kin: _Pass | None = None):
    """Joint-space inertia matrix by the composite-rigid-body algorithm."""
    _check(model, state)
    kin = kin or _Pass(model, state)
    topo = kin.topo
    S = kin.motion_subspace()
    Ic = kin.spatial_inertias()
    for idx in reversed(topo.levels):
        np.add.at(Ic, topo.parent[idx], Ic[idx])
    nv = topo.n + 6
    M = np.zeros((nv, nv))
    S0 = S[:, :6]
    M[:6, :6] = S0.T @ Ic[0] @ S0
    if topo.n:
        Sj = S[:, 6:]
        F = np.einsum("kij,jk->ki", Ic[1:], Sj)  # Ic_i s_i for each joint
        M[6:, :6] = F @ S0
        M[:6, 6:] = M[6:, :6].T
        B = np.where(topo.anc, F @ Sj, 0.0)
        M[6:, 6:] = B + B.T - np.diag(np.diag(B))
    return M


def compute_dynamics(model: RobotModel, state: GeneralizedState) -> DynamicsTerms:
    """Mass matrix, bias forces, stacked foot Jacobians and contact drift."""
    _check(model, state)
    kin = _Pass(model, state)
    h = kin.generalized_forces(model)
    M = mass_matrix(model, state, kin)
    topo = kin.topo
    c = model.n_feet
    nv = model.nv
    J = np.zeros((3 * c, nv))
    lk, off = kin.feet()
    pf = kin.p[lk] + off
    for k in range(c):
        rows = slice(3 * k, 3 * k + 3)
        J[rows, 0:3] = np.eye(3)
        J[rows, 3:6] = -skew(pf[k] - kin.p[0]) @ kin.R[0]
    if c and topo.n:
        cols = _cross(kin.ax[None, 1:, :], pf[:, None, :] - kin.p[None, 1:, :])
        cols = np.where(topo.foot_anc[:, :, None], cols, 0.0)
        J[:, 6:] = np.transpose(cols, (0, 2, 1)).reshape(3 * c, topo.n)
    wl = kin.w[lk]
    foot_vel = kin.v[lk] + _cross(wl, off)
    # gravity shifts every linear acceleration uniformly; undo it for the drift
    acc0 = kin.a[lk] + model.gravity
    Jdot_v = acc0 + _cross(kin.al[lk], off) + _cross(wl, _cross(wl, off))
    return DynamicsTerms(
        M=M,
        h=h,
        J=J,
        Jdot_v=Jdot_v.reshape(-1),
        foot_pos=pf.reshape(-1),
        foot_vel=foot_vel.reshape(-1),
    )


def foot_positions(model: RobotModel, state: GeneralizedState) -> np.ndarray:
    kin = _Pass(model, state, gravity=False)
    lk, off = kin.feet()
    return (kin.p[lk] + off).reshape(-1)


def solve_mass(M: np.ndarray, rhs: np.ndarray, max_cond: float = 1e12) -> np.ndarray:
    try:
        factor = cho_factor(M)
    except np.linalg.LinAlgError as exc:
        raise SingularMass("mass matrix is not positive definite") from exc
    d = np.abs(np.diag(factor[0]))
    if d.min() == 0 or (d.max() / d.min()) ** 2 > max_cond:
        raise SingularMass("mass matrix conditioning exceeds threshold")
    return cho_solve(factor, rhs)


def generalized_force(dyn: DynamicsTerms, tau_j, F_grf) -> np.ndarray:
    nv = dyn.nv
    out = np.zeros(nv)
    out[6:] = tau_j
    if dyn.J.shape[0]:
        out += dyn.J.T @ F_grf
    return out


def forward_dynamics(model: RobotModel, state: GeneralizedState, tau_j, F_grf, dyn=None):
    """Generalized accelerations ``M^-1 (S_j tau_j + J^T F_grf - h)``."""
    _check(model, state)
    tau_j = np.asarray(tau_j, dtype=float)
    F_grf = np.asarray(F_grf, dtype=float)
    if tau_j.shape != (model.n_joints,) or F_grf.shape != (3 * model.n_feet,):
        raise DimensionMismatch("tau_j must be (n,) and F_grf (3c,)")
    dyn = dyn or compute_dynamics(model, state)
    return solve_mass(dyn.M, generalized_force(dyn, tau_j, F_grf) - dyn.h)


def com_position(model: RobotModel, state: GeneralizedState) -> np.ndarray:
    """Whole-body centre of mass in world coordinates."""
    kin = _Pass(model, state, gravity=False)
    topo = kin.topo
    c = kin.p + np.einsum("lij,lj->li", kin.R, topo.com)
    return topo.mass @ c / topo.mass.sum()


def kinetic_energy(model: RobotModel, state: GeneralizedState, M=None) -> float:
    M = mass_matrix(model, state) if M is None else M
    return 0.5 * float(state.v @ M @ state.v)


def potential_energy(model: RobotModel, state: GeneralizedState) -> float:
    return -model.total_mass * float(model.gravity @ com_position(model, state))


def total_energy(model: RobotModel, state: GeneralizedState) -> float:
    return kinetic_energy(model, state) + potential_energy(model, state)
