"""Whole-body follower: one HQP solve per control tick producing joint torques."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import DynamicsTerms, GeneralizedState, compute_dynamics
from .hqp_cascade import LevelInfeasible, solve_hierarchy, working_sets
from .qp_solver import QpError
from .robot_model import RobotModel
from .wbc_tasks import (
    DecisionLayout,
    compute_force_bounds,
    task_body_stabilization,
    task_contact_motion,
    task_dynamic_consistency,
    task_ft_interaction,
    task_joint_tracking,
    task_kinematic_limits,
    task_torque_limits,
)


class Mode(enum.Enum):
    TRAINING = "training"
    DEPLOYMENT = "deployment"


MODE_TASKS = {
    Mode.TRAINING: ("T1", "T2", "T3", "T4"),
    Mode.DEPLOYMENT: ("T1", "T2", "T3", "T4", "T5", "T6", "T7"),
}

MU_TRUTH = "truth"
MU_OFF = "off"


class CascadeFailure(RuntimeError):
    pass


@dataclass
class FollowerConfig:
    mode: Mode = Mode.DEPLOYMENT
    k_p: object = 100.0
    k_d: object = 10.0
    rate: float = 50.0
    mu: object = MU_TRUTH  # "truth", "off" or a fixed coefficient
    xi_xy_max: float = 0.01
    delta_max: float = 0.03
    hip_rom: float | None = None  # total hip-yaw range (rad) about the nominal angle
    hip_joints: str = "hip_yaw"
    # contact flags for the constraints: "truth" (geometric contact), "force" (simulated F_N > 5 N)
    # or "scheduled" (geometric contact on feet the gait currently plans as stance)
    contact_source: str = "scheduled"

    def __post_init__(self):
        if isinstance(self.mode, str):
            self.mode = Mode(self.mode)
        if self.rate <= 0:
            raise ValueError("control rate must be positive")
        if np.any(np.asarray(self.k_p) < 0) or np.any(np.asarray(self.k_d) < 0):
            raise ValueError("gains must be non-negative")
        if not (self.mu in (MU_TRUTH, MU_OFF) or float(self.mu) >= 0):
            raise ValueError("mu must be 'truth', 'off' or a non-negative number")
        if self.contact_source not in ("truth", "force", "scheduled"):
            raise ValueError("contact_source must be truth, force or scheduled")
        if self.hip_rom is not None and self.hip_rom <= 0:
            raise ValueError("hip ROM must be positive")

    @property
    def dt(self) -> float:
        return 1.0 / self.rate


@dataclass
class FollowerOutput:
    tau: np.ndarray
    x: np.ndarray | None
    residuals: list
    ok: bool
    qdd: np.ndarray | None = None
    forces: np.ndarray | None = None
    bounds: object = None
    active: list = field(default_factory=list)
    error: str = ""


def restrict_hip_rom(model: RobotModel, rom: float | None, pattern: str = "hip_yaw") -> RobotModel:
    """Shrink hip joint limits to ``rom`` total range centred on the nominal angle."""
    if rom is None:
        return model
    q_min, q_max = model.q_min.copy(), model.q_max.copy()
    nominal = model.q_nominal
    for i, name in enumerate(model.joint_names):
        if pattern in name:
            q_min[i] = max(q_min[i], nominal[i] - 0.5 * rom)
            q_max[i] = min(q_max[i], nominal[i] + 0.5 * rom)
    return model.with_limits(q_min, q_max)


def effective_terrain(terrain, config: FollowerConfig):
    if config.mu in (MU_TRUTH, MU_OFF):
        return terrain
    return terrain.with_mu(float(config.mu))


def build_tasks(model: RobotModel, state: GeneralizedState, a_t, contact, terrain, config: FollowerConfig,
                dyn: DynamicsTerms | None = None, F_z_estimate=None, normals=None):
    """Task stack for the configured mode; returns (tasks, layout, bounds)."""
    dyn = dyn or compute_dynamics(model, state)
    layout = DecisionLayout.for_model(model)
    contact = np.asarray(contact, dtype=bool)
    wanted = MODE_TASKS[config.mode]
    tasks = [
        task_dynamic_consistency(dyn, layout),
        task_kinematic_limits(model, state, config.dt, layout),
        task_torque_limits(model, layout),
        task_joint_tracking(a_t, state, config.k_p, config.k_d, layout),
    ]
    bounds = None
    if "T5" in wanted:
        tasks.append(task_contact_motion(dyn, contact, layout))
    if "T6" in wanted:
        terr = effective_terrain(terrain, config)
        if F_z_estimate is None:
            n_on = max(1, int(contact.sum()))
            F_z_estimate = np.where(contact, model.total_mass * np.linalg.norm(model.gravity) / n_on, 0.0)
        bounds = compute_force_bounds(terr, contact, F_z_estimate, config.xi_xy_max, config.delta_max,
                                      model.foot_radii)
        tasks.append(task_ft_interaction(bounds, layout, terr, contact, model.foot_radii, normals,
                                         friction=config.mu != MU_OFF))
    if "T7" in wanted:
        tasks.append(task_body_stabilization(layout))
    return tasks, layout, bounds


class Follower:
    """Stateful wrapper keeping the warm start between ticks."""

    def __init__(self, model: RobotModel, config: FollowerConfig):
        self.config = config
        self.model = restrict_hip_rom(model, config.hip_rom, config.hip_joints)
        self._warm = None
        self.failures = 0

    def step(self, state, a_t, contact, terrain, dyn=None, F_z_estimate=None, normals=None) -> FollowerOutput:
        out = follower_step(self.model, state, a_t, contact, terrain, self.config, dyn=dyn,
                            F_z_estimate=F_z_estimate, normals=normals, warm_start=self._warm)
        if out.ok:
            self._warm = (out.x, out.active)
        else:
            self._warm = None
            self.failures += 1
        return out


def damping_torque(model: RobotModel, state: GeneralizedState, k_d) -> np.ndarray:
    tau = -np.broadcast_to(np.asarray(k_d, dtype=float), state.qd_j.shape) * state.qd_j
    return np.clip(tau, model.tau_min, model.tau_max)


def follower_step(model: RobotModel, state: GeneralizedState, a_t, contact, terrain, config: FollowerConfig,
                  dyn=None, F_z_estimate=None, normals=None, warm_start=None) -> FollowerOutput:
    a_t = np.asarray(a_t, dtype=float)
    if a_t.shape != state.q_j.shape:
        raise ValueError("reference has the wrong dimension")
    if np.any(np.abs(a_t - state.q_j) > 2 * math.pi):
        raise ValueError("reference is more than 2 pi away from the joint state")
    dyn = dyn or compute_dynamics(model, state)
    tasks, layout, bounds = build_tasks(model, state, a_t, contact, terrain, config, dyn, F_z_estimate, normals)
    try:
        sol = solve_hierarchy(tasks, d=layout.d, warm_start=warm_start)
    except (LevelInfeasible, QpError, np.linalg.LinAlgError) as exc:
        return FollowerOutput(damping_torque(model, state, config.k_d), None, [], False,
                              bounds=bounds, error=str(exc))
    x = sol.x_star
    qdd, F, tau = layout.split(x)
    # the cascade meets hard rows to 1e-8; clip the last bit of round-off
    tau = np.clip(tau, model.tau_min, model.tau_max)
    return FollowerOutput(tau, x, sol.residuals, True, qdd, F, bounds, working_sets(sol))


def stack_signature(config: FollowerConfig, model: RobotModel) -> list:
    """(id, kind, priority) for the mode's task stack, built on a resting robot."""
    state = GeneralizedState.at_rest(model)
    tasks, _, _ = build_tasks(model, state, model.q_nominal, np.ones(model.n_feet, dtype=bool),
                              _default_terrain(), config)
    ids = MODE_TASKS[config.mode]
    return [(tid, t.kind, t.priority, t.label) for tid, t in zip(ids, tasks)]


def _default_terrain():
    from .terrain import TerrainParams

    return TerrainParams()


__all__ = [
    "CascadeFailure", "Follower", "FollowerConfig", "FollowerOutput", "Mode", "MODE_TASKS",
    "build_tasks", "damping_torque", "follower_step", "restrict_hip_rom", "stack_signature",
]
