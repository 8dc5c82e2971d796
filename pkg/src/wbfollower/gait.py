"""Scripted tripod gait and closed-form leg kinematics.

Stands in for a learned locomotion policy: it produces joint-position
references a_t from a body velocity command. Legs are hip yaw (z axis) then
hip pitch and knee (both about -y, positive lifts the leg).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .robot_model import RobotModel


class IkOutOfReach(UserWarning):
    """Foot target outside the leg workspace; the solution was clamped."""


@dataclass(frozen=True)
class LegGeometry:
    name: str
    joints: tuple  # indices of yaw, pitch, knee in q_j
    mount: np.ndarray  # yaw joint origin in the base frame
    mount_rot: np.ndarray  # base <- leg frame
    L1: float
    L2: float
    L3: float


@dataclass(frozen=True)
class GaitParams:
    period: float = 0.8
    step_height: float = 0.05
    max_speed: float = 1.2
    max_yaw_rate: float = 1.5
    tripods: tuple = (("lf", "rm", "lr"), ("rf", "lm", "rr"))


@dataclass
class GaitSample:
    a_t: np.ndarray
    foot_targets: np.ndarray  # (c, 3) base frame
    stance: np.ndarray  # planned stance flags
    out_of_reach: np.ndarray


def leg_geometry(model: RobotModel) -> list:
    """Leg chains of a yaw-pitch-knee robot, ordered like ``model.feet``."""
    legs = []
    for foot in model.feet:
        chain = model.chain(foot.link)
        if len(chain) != 3:
            raise ValueError(f"foot {foot.name} is not on a 3-joint leg")
        yaw, pitch, knee = (model.links[j + 1] for j in chain)
        if not (np.allclose(yaw.axis, [0, 0, 1]) and np.allclose(pitch.axis, [0, -1, 0])
                and np.allclose(knee.axis, [0, -1, 0])):
            raise ValueError(f"leg {foot.name} does not have yaw-pitch-knee axes")
        legs.append(LegGeometry(
            name=foot.name,
            joints=tuple(chain),
            mount=np.asarray(yaw.origin_xyz, dtype=float),
            mount_rot=np.asarray(yaw.origin_rot, dtype=float),
            L1=float(pitch.origin_xyz[0]),
            L2=float(knee.origin_xyz[0]),
            L3=float(foot.offset[0]),
        ))
    return legs


def leg_fk(leg: LegGeometry, q) -> np.ndarray:
    """Foot position in the base frame."""
    q1, q2, q3 = q
    r = leg.L1 + leg.L2 * math.cos(q2) + leg.L3 * math.cos(q2 + q3)
    z = leg.L2 * math.sin(q2) + leg.L3 * math.sin(q2 + q3)
    local = np.array([r * math.cos(q1), r * math.sin(q1), z])
    return leg.mount + leg.mount_rot @ local


def leg_ik(leg: LegGeometry, p) -> tuple:
    """Knee-down inverse kinematics; returns (q, reachable)."""
    local = leg.mount_rot.T @ (np.asarray(p, dtype=float) - leg.mount)
    q1 = math.atan2(local[1], local[0])
    r = math.hypot(local[0], local[1]) - leg.L1
    z = local[2]
    D = (r * r + z * z - leg.L2 ** 2 - leg.L3 ** 2) / (2.0 * leg.L2 * leg.L3)
    ok = -1.0 <= D <= 1.0
    D = min(1.0, max(-1.0, D))
    q3 = -math.acos(D)
    q2 = math.atan2(z, r) - math.atan2(leg.L3 * math.sin(q3), leg.L2 + leg.L3 * math.cos(q3))
    return np.array([q1, q2, q3]), ok


def nominal_feet(model: RobotModel) -> np.ndarray:
    legs = leg_geometry(model)
    q = model.q_nominal
    return np.array([leg_fk(leg, q[list(leg.joints)]) for leg in legs])


def _smooth(u):
    return u * u * (3.0 - 2.0 * u)


def _rot_z(angle):
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def sample_gait(t: float, command, model: RobotModel, params: GaitParams | None = None,
                legs=None, home=None) -> GaitSample:
    params = params or GaitParams()
    vx, vy, wz = (float(c) for c in command)
    if math.hypot(vx, vy) > params.max_speed + 1e-12 or abs(wz) > params.max_yaw_rate + 1e-12:
        raise ValueError("command exceeds the configured caps")
    legs = legs or leg_geometry(model)
    home = nominal_feet(model) if home is None else home
    group = np.zeros(len(legs), dtype=int)
    for k, leg in enumerate(legs):
        hits = [g for g, members in enumerate(params.tripods)
                if any(leg.name == m or leg.name.startswith(m + "_") for m in members)]
        if len(hits) != 1:
            raise ValueError(f"leg {leg.name} must belong to exactly one tripod")
        group[k] = hits[0]
    T_st = 0.5 * params.period
    activity = min(1.0, (math.hypot(vx, vy) + 0.2 * abs(wz)) / 0.05)
    q = model.q_nominal.copy()
    targets = np.zeros((len(legs), 3))
    stance = np.zeros(len(legs), dtype=bool)
    reach = np.zeros(len(legs), dtype=bool)
    stride = np.array([vx, vy, 0.0]) * T_st
    turn = wz * T_st
    for k, leg in enumerate(legs):
        phase = (t / params.period + 0.5 * group[k]) % 1.0
        if phase < 0.5:
            s = 0.5 - phase / 0.5  # +1/2 at touchdown down to -1/2 at liftoff
            lift = 0.0
            stance[k] = True
        else:
            u = (phase - 0.5) / 0.5
            s = -0.5 + _smooth(u)
            lift = params.step_height * activity * math.sin(math.pi * u)
        p = _rot_z(turn * s) @ home[k] + stride * s
        p[2] = home[k][2] + lift
        targets[k] = p
        qk, ok = leg_ik(leg, p)
        reach[k] = not ok
        q[list(leg.joints)] = qk
    return GaitSample(q, targets, stance, reach)


def gait_reference(t: float, command, model: RobotModel, params: GaitParams | None = None) -> np.ndarray:
    """Joint-position reference a_t for a tripod gait at body velocity ``command``."""
    sample = sample_gait(t, command, model, params)
    if sample.out_of_reach.any():
        names = [leg.name for leg, bad in zip(leg_geometry(model), sample.out_of_reach) if bad]
        warnings.warn(f"foot targets out of reach for {names}; clamped to the workspace", IkOutOfReach)
    return sample.a_t
