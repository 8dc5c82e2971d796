"""Whole-body tasks over the decision vector ``x = [qdd, F_grf, tau_j]``.

Priorities: dynamics, kinematic limits and torque limits are hard (0), joint
tracking is 1, stance-foot motion and foot-terrain force bounds share 2, body
stabilization is 3.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import DynamicsTerms, GeneralizedState
from .hqp_cascade import Task
from .robot_model import RobotModel

SQRT_HALF = math.sqrt(2.0) / 2.0

PRIORITY = {"T1": 0, "T2": 0, "T3": 0, "T4": 1, "T5": 2, "T6": 2, "T7": 3}
LABELS = {
    "T1": "dynamic consistency",
    "T2": "kinematic limits",
    "T3": "torque limits",
    "T4": "joint tracking",
    "T5": "contact motion",
    "T6": "foot-terrain interaction",
    "T7": "body stabilization",
}


@dataclass(frozen=True)
class DecisionLayout:
    nv: int
    n_feet: int
    n_joints: int

    @classmethod
    def for_model(cls, model: RobotModel) -> "DecisionLayout":
        return cls(model.nv, model.n_feet, model.n_joints)

    @property
    def qdd(self) -> slice:
        return slice(0, self.nv)

    @property
    def qdd_j(self) -> slice:
        return slice(6, self.nv)

    @property
    def forces(self) -> slice:
        return slice(self.nv, self.nv + 3 * self.n_feet)

    @property
    def tau(self) -> slice:
        return slice(self.nv + 3 * self.n_feet, self.d)

    @property
    def d(self) -> int:
        return self.nv + 3 * self.n_feet + self.n_joints

    def foot(self, i: int) -> slice:
        s = self.nv + 3 * i
        return slice(s, s + 3)

    def split(self, x):
        return x[self.qdd], x[self.forces], x[self.tau]


@dataclass
class FootForceBounds:
    F_xy_max: np.ndarray
    F_z_max: np.ndarray
    xi_xy_max: float
    delta_max: float
    contact: np.ndarray
    shear: float  # logistic shear factor at xi_xy_max

    def __post_init__(self):
        if np.any(self.F_xy_max < 0) or np.any(self.F_z_max < 0):
            raise ValueError("force bounds must be non-negative")
        if np.any(self.F_z_max[~self.contact.astype(bool)] != 0):
            raise ValueError("F_z_max must vanish on swing feet")


def _selector(d: int, cols: slice) -> np.ndarray:
    idx = np.arange(d)[cols]
    S = np.zeros((idx.size, d))
    S[np.arange(idx.size), idx] = 1.0
    return S


def task_dynamic_consistency(dyn: DynamicsTerms, layout: DecisionLayout) -> Task:
    A = np.zeros((layout.nv, layout.d))
    A[:, layout.qdd] = dyn.M
    A[:, layout.forces] = -dyn.J.T
    A[layout.qdd_j, layout.tau] = -np.eye(layout.n_joints)
    return Task.equality(A, -dyn.h, PRIORITY["T1"], LABELS["T1"], d=layout.d)


def acceleration_limits(model: RobotModel, state: GeneralizedState, dt_loop: float):
    """Joint acceleration window that stops each joint at its limit within 10 control periods."""
    if dt_loop <= 0:
        raise ValueError("dt_loop must be positive")
    Dt = 10.0 * dt_loop
    q, qd = state.q_j, state.qd_j
    gain = 2.0 / Dt ** 2
    return gain * (model.q_min - q - Dt * qd), gain * (model.q_max - q - Dt * qd)


def task_kinematic_limits(model: RobotModel, state: GeneralizedState, dt_loop: float,
                          layout: DecisionLayout | None = None) -> Task:
    layout = layout or DecisionLayout.for_model(model)
    lo, hi = acceleration_limits(model, state, dt_loop)
    S = _selector(layout.d, layout.qdd_j)
    return Task.inequality(np.vstack([S, -S]), np.concatenate([hi, -lo]),
                           PRIORITY["T2"], LABELS["T2"], d=layout.d)


def task_torque_limits(model: RobotModel, layout: DecisionLayout | None = None) -> Task:
    layout = layout or DecisionLayout.for_model(model)
    S = _selector(layout.d, layout.tau)
    return Task.inequality(np.vstack([S, -S]), np.concatenate([model.tau_max, -model.tau_min]),
                           PRIORITY["T3"], LABELS["T3"], d=layout.d)


def tracking_acceleration(a_t, state: GeneralizedState, k_p, k_d) -> np.ndarray:
    k_p = np.broadcast_to(np.asarray(k_p, dtype=float), state.q_j.shape)
    k_d = np.broadcast_to(np.asarray(k_d, dtype=float), state.q_j.shape)
    if np.any(k_p < 0) or np.any(k_d < 0):
        raise ValueError("gains must be non-negative")
    return k_p * (np.asarray(a_t, dtype=float) - state.q_j) - k_d * state.qd_j


def task_joint_tracking(a_t, state: GeneralizedState, k_p, k_d, layout: DecisionLayout) -> Task:
    target = tracking_acceleration(a_t, state, k_p, k_d)
    return Task.equality(_selector(layout.d, layout.qdd_j), target, PRIORITY["T4"], LABELS["T4"], d=layout.d)


def task_contact_motion(dyn: DynamicsTerms, contact, layout: DecisionLayout) -> Task:
    rows = [dyn.foot_rows(i) for i, on in enumerate(contact) if on]
    A = np.zeros((3 * len(rows), layout.d))
    b = np.zeros(3 * len(rows))
    for k, r in enumerate(rows):
        A[3 * k:3 * k + 3, layout.qdd] = dyn.J[r]
        b[3 * k:3 * k + 3] = -dyn.Jdot_v[r]
    return Task.equality(A, b, PRIORITY["T5"], LABELS["T5"], d=layout.d)


def _shear(xi: float, K: float) -> float:
    # logistic factor written as tanh; equal to (1 - e^-u) / (1 + e^-u) with u = 1.43 xi / K
    return math.tanh(0.715 * xi / K)


def compute_force_bounds(terrain, contact, F_z_estimate, xi_xy_max: float, delta_max: float, radii) -> FootForceBounds:
    if xi_xy_max < 0 or delta_max < 0:
        raise ValueError("xi_xy_max and delta_max must be non-negative")
    contact = np.asarray(contact, dtype=bool)
    R = np.broadcast_to(np.asarray(radii, dtype=float), contact.shape)
    Fz = np.asarray(F_z_estimate, dtype=float)
    s = _shear(xi_xy_max, terrain.K)
    F_xy = SQRT_HALF * (np.pi * R ** 2 * terrain.a + terrain.mu * Fz) * s
    F_z = (np.pi * R * terrain.k_c + np.pi * R ** 2 * terrain.k_phi) * delta_max ** terrain.m
    F_z = np.where(contact, F_z, 0.0)
    return FootForceBounds(np.maximum(F_xy, 0.0), F_z, float(xi_xy_max), float(delta_max), contact, s)


def _frames(normals, c):
    if normals is None:
        return [np.eye(3)] * c
    out = []
    for n in np.asarray(normals, dtype=float).reshape(c, 3):
        n = n / np.linalg.norm(n)
        t1 = np.cross([0.0, 1.0, 0.0], n)
        t1 /= np.linalg.norm(t1)
        out.append(np.vstack([t1, np.cross(n, t1), n]))
    return out


def task_ft_interaction(bounds: FootForceBounds, layout: DecisionLayout, terrain, contact, radii,
                        normals=None, friction: bool = True) -> Task:
    """Friction pyramid, unilateral and normal-cap rows for stance feet; zero force for swing feet.

    With ``friction=False`` the tangential pyramid rows are left out.
    """
    c = layout.n_feet
    R = np.broadcast_to(np.asarray(radii, dtype=float), (c,))
    frames = _frames(normals, c)
    rows, rhs = [], []
    s = bounds.shear
    for i, on in enumerate(np.asarray(contact, dtype=bool)):
        cols = layout.foot(i)
        if on:
            T = frames[i]
            t1, t2, n = T
            if friction:
                cap = SQRT_HALF * np.pi * R[i] ** 2 * terrain.a * s
                slope = SQRT_HALF * terrain.mu * s
                for t in (t1, t2):
                    for sign in (1.0, -1.0):
                        r = np.zeros(layout.d)
                        r[cols] = sign * t - slope * n
                        rows.append(r)
                        rhs.append(cap)
            r = np.zeros(layout.d)
            r[cols] = n
            rows.append(r)
            rhs.append(bounds.F_z_max[i])
            r = np.zeros(layout.d)
            r[cols] = -n
            rows.append(r)
            rhs.append(0.0)
        else:
            for k in range(3):
                for sign in (1.0, -1.0):
                    r = np.zeros(layout.d)
                    r[cols.start + k] = sign
                    rows.append(r)
                    rhs.append(0.0)
    D = np.array(rows).reshape(-1, layout.d)
    return Task.inequality(D, np.array(rhs), PRIORITY["T6"], LABELS["T6"], d=layout.d)


def task_body_stabilization(layout: DecisionLayout) -> Task:
    """Zero roll and pitch angular acceleration and zero vertical base acceleration."""
    A = np.zeros((3, layout.d))
    A[0, 3] = 1.0
    A[1, 4] = 1.0
    A[2, 2] = 1.0
    return Task.equality(A, np.zeros(3), PRIORITY["T7"], LABELS["T7"], d=layout.d)
