"""Scenario harness: forward dynamics on terramechanics terrain under the follower.

Each physics step is a kick-drift-kick (velocity Verlet) update. Contact
damping and the normal stiffness are taken implicitly in every half-kick,
so the stiff soil contact stays stable at a 5 ms step. The follower runs at
its own rate with torques held between ticks.
"""

from __future__ import annotations

import csv
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import terrain as terr
from .dynamics import GeneralizedState, compute_dynamics, orthonormalize, so3_exp
from .follower import Follower, FollowerConfig, Mode
from .gait import GaitParams, leg_geometry, nominal_feet, sample_gait
from .robot_model import RobotModel, load_bundled, load_model_file


class ScenarioError(ValueError):
    pass


class NumericalDivergence(RuntimeError):
    def __init__(self, tick: int, t: float):
        super().__init__(f"generalized velocity diverged at tick {tick} (t = {t:.3f} s)")
        self.tick = tick
        self.t = t


class SolverFailureBudgetExceeded(RuntimeError):
    def __init__(self, failures: int, ticks: int):
        super().__init__(f"{failures} of {ticks} control ticks fell back to damping")
        self.failures = failures
        self.ticks = ticks


@dataclass
class SafetyThresholds:
    slip: float = 0.04
    torque: float = 20.0
    joint_margin: float = 1e-3
    torque_release: float = 0.95


@dataclass
class Scenario:
    model: RobotModel
    terrain: terr.TerrainParams = field(default_factory=terr.TerrainParams)
    follower: FollowerConfig | None = field(default_factory=FollowerConfig)
    gait: GaitParams = field(default_factory=GaitParams)
    commands: list = field(default_factory=lambda: [(0.0, (0.0, 0.0, 0.0))])
    duration: float = 10.0
    dt: float = 0.005
    seed: int = 0
    ramp: float = 1.0
    init_noise: float = 0.0
    base_height: float | None = None  # None: settle the nominal stance on the ground
    safety: SafetyThresholds = field(default_factory=SafetyThresholds)
    name: str = "scenario"

    def __post_init__(self):
        if self.duration <= 0 or self.dt <= 0:
            raise ScenarioError("duration and physics step must be positive")
        if self.follower is not None:
            ratio = self.follower.dt / self.dt
            if abs(ratio - round(ratio)) > 1e-9 or round(ratio) < 1:
                raise ScenarioError("physics step must divide the follower period exactly")
        self.commands = sorted((float(t), tuple(float(c) for c in cmd)) for t, cmd in self.commands)

    @property
    def substeps(self) -> int:
        return 1 if self.follower is None else int(round(self.follower.dt / self.dt))

    def command_at(self, t: float) -> np.ndarray:
        cmd = np.zeros(3)
        for t0, c in self.commands:
            if t >= t0 - 1e-12:
                cmd = np.array(c)
        if self.ramp > 0:
            cmd = cmd * min(1.0, t / self.ramp)
        return cmd


@dataclass
class Trajectory:
    time: np.ndarray
    base_pos: np.ndarray
    base_rot: np.ndarray  # (T, 3, 3)
    q: np.ndarray
    v: np.ndarray
    tau: np.ndarray
    forces: np.ndarray  # (T, c, 3)
    foot_pos: np.ndarray  # (T, c, 3)
    contact: np.ndarray  # (T, c)
    reference: np.ndarray
    control_time: np.ndarray
    control_ok: np.ndarray
    tau_excess: np.ndarray  # per control tick: max(|tau_qp| - limit), before any clipping
    qp_forces: np.ndarray  # per control tick F_grf* (c, 3)
    qp_contact: np.ndarray
    qp_bound_violation: np.ndarray  # per control tick worst pyramid-row excess of F_grf*
    residuals: list
    joint_names: list
    foot_names: list
    wall_time: float = 0.0
    dt: float = 0.005

    def __len__(self):
        return self.time.shape[0]


@dataclass
class SafetyReport:
    slip_events: int
    max_slip: float
    torque_events: int
    max_torque: float
    collision_events: int
    stance_slips: dict  # foot -> list of per-stance slip distances
    step_lengths: dict  # effective: stride less the slip of the stance it spans
    strides: dict
    solver_failures: int
    control_ticks: int
    thresholds: SafetyThresholds = field(default_factory=SafetyThresholds)

    @property
    def total_events(self) -> int:
        return self.slip_events + self.torque_events + self.collision_events

    @property
    def mean_slip(self) -> float:
        vals = [s for v in self.stance_slips.values() for s in v]
        return float(np.mean(vals)) if vals else 0.0

    @property
    def mean_stride(self) -> float:
        vals = [s for v in self.strides.values() for s in v]
        return float(np.mean(vals)) if vals else 0.0

    @property
    def mean_step_length(self) -> float:
        vals = [s for v in self.step_lengths.values() for s in v]
        return float(np.mean(vals)) if vals else 0.0

    def to_dict(self) -> dict:
        return {
            "slip_events": self.slip_events,
            "max_slip_m": self.max_slip,
            "mean_slip_m": self.mean_slip,
            "torque_events": self.torque_events,
            "max_torque_Nm": self.max_torque,
            "collision_events": self.collision_events,
            "solver_failures": self.solver_failures,
            "control_ticks": self.control_ticks,
            "mean_step_length_m": self.mean_step_length,
            "mean_stride_m": self.mean_stride,
            "stance_slips_m": self.stance_slips,
            "step_lengths_m": self.step_lengths,
            "strides_m": self.strides,
            "thresholds": vars(self.thresholds),
        }

    def summary(self) -> str:
        lines = [
            f"slip events        {self.slip_events}  (max per-stance slip {self.max_slip * 1000:.1f} mm,"
            f" mean {self.mean_slip * 1000:.1f} mm)",
            f"torque events      {self.torque_events}  (max |tau| {self.max_torque:.2f} N m)",
            f"collision events   {self.collision_events}",
            f"solver fallbacks   {self.solver_failures} / {self.control_ticks}",
            f"mean step length   {self.mean_step_length * 1000:.1f} mm effective,"
            f" {self.mean_stride * 1000:.1f} mm touchdown to touchdown",
        ]
        return "\n".join(lines)


# ---------------------------------------------------------------- integration


def static_sinkage(model: RobotModel, terrain: terr.TerrainParams, n_support: int) -> float:
    R = float(model.foot_radii[0])
    load = model.total_mass * float(np.linalg.norm(model.gravity)) / n_support
    k = math.pi * R * R * (terrain.k_c / R + terrain.k_phi)
    return (load / k) ** (1.0 / terrain.m)


def initial_state(scn: Scenario, rng: np.random.Generator) -> GeneralizedState:
    model = scn.model
    q = model.q_nominal.copy()
    if scn.init_noise > 0:
        q = q + rng.normal(0.0, scn.init_noise, size=q.shape)
    state = GeneralizedState.at_rest(model, q_j=q)
    if scn.base_height is not None:
        state.base_pos = np.array([0.0, 0.0, scn.base_height])
        return state
    from .dynamics import foot_positions

    feet = foot_positions(model, state).reshape(-1, 3)
    ground = np.array([scn.terrain.ground.height(p[0], p[1]) for p in feet])
    sink = static_sinkage(model, scn.terrain, model.n_feet)
    state.base_pos = np.array([0.0, 0.0, float(np.max(ground - feet[:, 2])) - sink])
    return state


class _Plant:
    def __init__(self, scn: Scenario):
        self.model = scn.model
        self.terrain = scn.terrain
        self.radii = scn.model.foot_radii
        self.c = scn.model.n_feet
        self.contacts = [None] * self.c

    def refresh_contacts(self, dyn, dt):
        pos = dyn.foot_pos.reshape(-1, 3)
        vel = dyn.foot_vel.reshape(-1, 3)
        self.contacts = [terr.update_contact_state(self.terrain, pos[i], vel[i], self.contacts[i], dt)
                         for i in range(self.c)]

    def kick(self, state: GeneralizedState, dyn, tau, h):
        """Half-kick with linearly implicit contact; returns (v_new, forces)."""
        M = dyn.M
        vel = dyn.foot_vel.reshape(-1, 3)
        f0 = np.zeros((self.c, 3))
        B = np.zeros((self.c, 3, 3))
        on = np.zeros(self.c, dtype=bool)
        P = self.terrain
        for i, cp in enumerate(self.contacts):
            if cp is None:
                continue
            n = cp.normal
            R = float(self.radii[i])
            v_n = float(vel[i] @ n)
            elastic = terr.normal_elastic(P, R, cp.delta)
            F_N = max(0.0, elastic - P.b_N * v_n)
            static = (math.pi * R * R * P.a + P.mu * F_N) * terr.shear_factor(cp.xi, P.K)
            f0[i] = elastic * n - static * cp.direction
            nn = np.outer(n, n)
            B[i] = (P.b_N + h * terr.normal_stiffness(P, R, cp.delta)) * nn + P.b_T * (np.eye(3) - nn)
            on[i] = True
        gen = np.zeros(dyn.nv)
        gen[6:] = tau
        rhs0 = M @ state.v + h * (gen - dyn.h)
        forces = np.zeros((self.c, 3))
        for _ in range(self.c + 1):
            A = M.copy()
            rhs = rhs0.copy()
            for i in np.flatnonzero(on):
                Ji = dyn.J[3 * i:3 * i + 3]
                A += h * Ji.T @ B[i] @ Ji
                rhs += h * Ji.T @ f0[i]
            v_new = np.linalg.solve(A, rhs)
            forces[:] = 0.0
            released = False
            for i in np.flatnonzero(on):
                Ji = dyn.J[3 * i:3 * i + 3]
                forces[i] = f0[i] - B[i] @ (Ji @ v_new)
                if forces[i] @ self.contacts[i].normal < 0.0:
                    on[i] = False
                    released = True
            if not released:
                break
        # a released foot may still see a residual pull; it carries no force
        for i in range(self.c):
            if not on[i]:
                forces[i] = 0.0
        return v_new, forces


def _drift(state: GeneralizedState, v, dt) -> GeneralizedState:
    R = orthonormalize(state.R_b @ so3_exp(v[3:6] * dt))
    return GeneralizedState(state.base_pos + dt * v[:3], R, state.q_j + dt * v[6:], v.copy())


def _excess_rows(F, contact, bounds_task):
    if bounds_task is None:
        return 0.0
    return float(np.max(bounds_task.D @ F - bounds_task.f, initial=0.0))


def run_scenario(scn: Scenario, progress=None):
    """Simulate ``scn``; returns (Trajectory, SafetyReport)."""
    start = time.perf_counter()
    rng = np.random.default_rng(scn.seed)
    model = scn.model
    plant = _Plant(scn)
    state = initial_state(scn, rng)
    follower = Follower(model, scn.follower) if scn.follower is not None else None
    legs = leg_geometry(model) if follower else None
    home = nominal_feet(model) if follower else None
    n_steps = int(round(scn.duration / scn.dt))
    sub = scn.substeps
    n_ctrl_planned = int(math.ceil(n_steps / sub))
    c, n = model.n_feet, model.n_joints

    rec = {k: [] for k in ("t", "p", "R", "q", "v", "tau", "F", "foot", "contact", "ref")}
    ctrl = {k: [] for k in ("t", "ok", "excess", "F", "contact", "viol", "res")}
    tau = np.zeros(n)
    ref = model.q_nominal.copy()
    dyn = compute_dynamics(model, state)
    plant.refresh_contacts(dyn, scn.dt)
    forces = np.zeros((c, 3))
    t = 0.0
    for k in range(n_steps):
        t = k * scn.dt
        contact = np.array([cp is not None for cp in plant.contacts])
        if follower is not None and k % sub == 0:
            cmd = scn.command_at(t)
            gs = sample_gait(t, cmd, model, scn.gait, legs=legs, home=home)
            ref = gs.a_t
            flags = contact
            if scn.follower.contact_source == "force":
                flags = forces @ np.array([0.0, 0.0, 1.0]) > 5.0
            elif scn.follower.contact_source == "scheduled":
                flags = contact & gs.stance
            normals = np.array([cp.normal if cp is not None else [0.0, 0.0, 1.0] for cp in plant.contacts])
            Fz = np.where(flags, np.maximum(forces @ np.array([0.0, 0.0, 1.0]), 0.0), 0.0)
            out = follower.step(state, ref, flags, scn.terrain, dyn=dyn,
                                F_z_estimate=Fz if Fz.sum() > 0 else None, normals=normals)
            tau = out.tau
            ctrl["t"].append(t)
            ctrl["ok"].append(out.ok)
            ctrl["contact"].append(flags.copy())
            ctrl["res"].append(out.residuals)
            if out.ok:
                raw = out.x[-n:]
                lim = follower.model
                ctrl["excess"].append(float(max(np.max(raw - lim.tau_max), np.max(lim.tau_min - raw))))
                ctrl["F"].append(out.forces.reshape(c, 3))
                ctrl["viol"].append(_pyramid_violation(out, follower, scn.terrain, flags, normals))
            else:
                ctrl["excess"].append(0.0)
                ctrl["F"].append(np.full((c, 3), np.nan))
                ctrl["viol"].append(0.0)
            if follower.failures > 0.01 * n_ctrl_planned:
                raise SolverFailureBudgetExceeded(follower.failures, len(ctrl["t"]))  # budget
        # kick - drift - kick
        v_half, f1 = plant.kick(state, dyn, tau, 0.5 * scn.dt)
        state = _drift(state, v_half, scn.dt)
        dyn = compute_dynamics(model, state)
        plant.refresh_contacts(dyn, scn.dt)
        v_new, f2 = plant.kick(state, dyn, tau, 0.5 * scn.dt)
        state.v = v_new
        if not np.all(np.isfinite(v_new)) or np.linalg.norm(v_new) > 1e3:
            raise NumericalDivergence(k + 1, t + scn.dt)
        dyn = compute_dynamics(model, state)
        forces = f2
        rec["t"].append(t + scn.dt)
        rec["p"].append(state.base_pos.copy())
        rec["R"].append(state.R_b.copy())
        rec["q"].append(state.q_j.copy())
        rec["v"].append(state.v.copy())
        rec["tau"].append(tau.copy())
        rec["F"].append(f2.copy())
        rec["foot"].append(dyn.foot_pos.reshape(c, 3).copy())
        rec["contact"].append(np.array([cp is not None for cp in plant.contacts]))
        rec["ref"].append(ref.copy())
        if progress is not None:
            progress(k + 1, n_steps)

    traj = Trajectory(
        time=np.array(rec["t"]),
        base_pos=np.array(rec["p"]),
        base_rot=np.array(rec["R"]),
        q=np.array(rec["q"]),
        v=np.array(rec["v"]),
        tau=np.array(rec["tau"]),
        forces=np.array(rec["F"]).reshape(-1, c, 3),
        foot_pos=np.array(rec["foot"]).reshape(-1, c, 3),
        contact=np.array(rec["contact"]).reshape(-1, c),
        reference=np.array(rec["ref"]),
        control_time=np.array(ctrl["t"]),
        control_ok=np.array(ctrl["ok"], dtype=bool),
        tau_excess=np.array(ctrl["excess"]),
        qp_forces=np.array(ctrl["F"]).reshape(-1, c, 3),
        qp_contact=np.array(ctrl["contact"]).reshape(-1, c),
        qp_bound_violation=np.array(ctrl["viol"]),
        residuals=ctrl["res"],
        joint_names=model.joint_names,
        foot_names=[f.name for f in model.feet],
        wall_time=time.perf_counter() - start,
        dt=scn.dt,
    )
    report = safety_report(traj, model, scn.safety, follower.failures if follower else 0)
    return traj, report


def _pyramid_violation(out, follower, terrain, flags, normals) -> float:
    """Largest excess of F_grf* over the foot-terrain bounds actually imposed."""
    if follower.config.mode is not Mode.DEPLOYMENT or out.bounds is None:
        return 0.0
    from .follower import MU_OFF, effective_terrain
    from .wbc_tasks import DecisionLayout, task_ft_interaction

    layout = DecisionLayout.for_model(follower.model)
    task = task_ft_interaction(out.bounds, layout, effective_terrain(terrain, follower.config), flags,
                               follower.model.foot_radii, normals, friction=follower.config.mu != MU_OFF)
    return _excess_rows(out.x, flags, task)


# ---------------------------------------------------------------- metrics


def debounce(flags: np.ndarray, ticks: int = 3) -> np.ndarray:
    """Contact flags with runs shorter than ``ticks`` samples absorbed into the preceding state.

    Transitions that persist keep their original tick, so stance phases are not shifted.
    """
    out = np.array(flags, dtype=bool)
    for j in range(out.shape[1]):
        col = out[:, j]
        k = 0
        T = col.size
        while k < T:
            e = k
            while e < T and col[e] == col[k]:
                e += 1
            if k > 0 and e - k < ticks and e < T:
                col[k:e] = col[k - 1]
                # merged run may join the next one; rescan from the previous boundary
                while k > 0 and col[k - 1] == col[k]:
                    k -= 1
                continue
            k = e
    return out


def stance_segments(contact: np.ndarray, ticks: int = 3) -> list:
    """Per foot, list of (start, stop) tick ranges of debounced stance."""
    flags = debounce(contact, ticks)
    out = []
    for j in range(flags.shape[1]):
        segs = []
        k = 0
        T = flags.shape[0]
        while k < T:
            if flags[k, j]:
                s = k
                while k < T and flags[k, j]:
                    k += 1
                segs.append((s, k))
            else:
                k += 1
        out.append(segs)
    return out


def measure_slip(foot_pos: np.ndarray, segments: list) -> list:
    """Tangential path length of each foot over each stance phase."""
    out = []
    for j, segs in enumerate(segments):
        vals = []
        for s, e in segs:
            xy = foot_pos[s:e, j, :2]
            vals.append(float(np.sum(np.linalg.norm(np.diff(xy, axis=0), axis=1))) if e - s > 1 else 0.0)
        out.append(vals)
    return out


def step_lengths(foot_pos: np.ndarray, segments: list) -> list:
    """Horizontal distance between consecutive touchdown points of each foot."""
    out = []
    for j, segs in enumerate(segments):
        td = [foot_pos[s, j, :2] for s, _ in segs]
        out.append([float(np.linalg.norm(b - a)) for a, b in zip(td[:-1], td[1:])])
    return out


def effective_step_lengths(foot_pos: np.ndarray, segments: list, slips: list | None = None) -> list:
    """Touchdown-to-touchdown distance less the slip of the stance in between."""
    slips = measure_slip(foot_pos, segments) if slips is None else slips
    return [[d - s for d, s in zip(steps, sl)] for steps, sl in zip(step_lengths(foot_pos, segments), slips)]


def _excursions(signal: np.ndarray, on, off) -> int:
    """Count rising edges of ``on`` that persist until ``off`` clears (hysteresis)."""
    events = 0
    for j in range(signal.shape[1]):
        active = False
        for k in range(signal.shape[0]):
            if not active and on(signal[k, j], j):
                events += 1
                active = True
            elif active and off(signal[k, j], j):
                active = False
    return events


def safety_report(traj: Trajectory, model: RobotModel, th: SafetyThresholds, failures: int = 0) -> SafetyReport:
    segs = stance_segments(traj.contact)
    slips = measure_slip(traj.foot_pos, segs)
    strides = step_lengths(traj.foot_pos, segs)
    steps = effective_step_lengths(traj.foot_pos, segs, slips)
    flat = [s for v in slips for s in v]
    slip_events = sum(1 for s in flat if s > th.slip)
    tau_abs = np.abs(traj.tau)
    torque_events = _excursions(tau_abs, lambda x, j: x > th.torque, lambda x, j: x < th.torque_release * th.torque)
    lo, hi = model.q_min - th.joint_margin, model.q_max + th.joint_margin
    collision_events = _excursions(
        traj.q,
        lambda x, j: x < lo[j] or x > hi[j],
        lambda x, j: model.q_min[j] <= x <= model.q_max[j],
    )
    names = traj.foot_names
    return SafetyReport(
        slip_events=slip_events,
        max_slip=max(flat) if flat else 0.0,
        torque_events=torque_events,
        max_torque=float(tau_abs.max(initial=0.0)),
        collision_events=collision_events,
        stance_slips={names[j]: slips[j] for j in range(len(names))},
        step_lengths={names[j]: steps[j] for j in range(len(names))},
        strides={names[j]: strides[j] for j in range(len(names))},
        solver_failures=failures,
        control_ticks=len(traj.control_time),
        thresholds=th,
    )


def tracking_error(traj: Trajectory, skip: float = 1.0) -> float:
    """Mean absolute joint tracking error after ``skip`` seconds."""
    mask = traj.time > skip
    return float(np.mean(np.abs(traj.reference[mask] - traj.q[mask])))


# ---------------------------------------------------------------- I/O


def csv_header(traj: Trajectory) -> list:
    j, f = traj.joint_names, traj.foot_names
    cols = ["time", "base_x", "base_y", "base_z", "base_roll", "base_pitch", "base_yaw"]
    cols += [f"q_{n}" for n in j]
    cols += ["vx", "vy", "vz", "wx", "wy", "wz"] + [f"qd_{n}" for n in j]
    cols += [f"tau_{n}" for n in j]
    cols += [f"F_{n}_{a}" for n in f for a in "xyz"]
    cols += [f"p_{n}_{a}" for n in f for a in "xyz"]
    cols += [f"contact_{n}" for n in f]
    cols += [f"ref_{n}" for n in j]
    return cols


def rpy_from_matrix(R) -> np.ndarray:
    pitch = math.asin(max(-1.0, min(1.0, -R[2, 0])))
    return np.array([math.atan2(R[2, 1], R[2, 2]), pitch, math.atan2(R[1, 0], R[0, 0])])


def trajectory_rows(traj: Trajectory):
    for k in range(len(traj)):
        yield np.concatenate([
            [traj.time[k]], traj.base_pos[k], rpy_from_matrix(traj.base_rot[k]), traj.q[k], traj.v[k],
            traj.tau[k], traj.forces[k].ravel(), traj.foot_pos[k].ravel(),
            traj.contact[k].astype(float), traj.reference[k],
        ])


def write_trajectory_csv(traj: Trajectory, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(csv_header(traj))
        for row in trajectory_rows(traj):
            w.writerow([repr(float(x)) for x in row])


def read_trajectory_csv(path) -> dict:
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        data = np.array([[float(x) for x in row] for row in r])
    return {"header": header, "data": data.reshape(-1, len(header))}


def write_report(report: SafetyReport, path, extra: dict | None = None) -> None:
    doc = report.to_dict()
    if extra:
        doc.update(extra)
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True))


# ---------------------------------------------------------------- scenario files


def _model_from(ref, base_dir: Path | None):
    if ref is None or ref == "hexapod":
        return load_bundled("hexapod")
    p = Path(ref)
    if base_dir is not None and not p.is_absolute():
        p = base_dir / p
    return load_model_file(p)


def parse_scenario(text: str, base_dir=None) -> Scenario:
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ScenarioError(f"scenario is not valid YAML: {exc}") from exc
    if not isinstance(doc, dict):
        raise ScenarioError("scenario must be a mapping")
    known = {"name", "robot", "duration", "physics_dt", "seed", "terrain", "follower", "gait", "commands",
             "ramp", "safety", "init_noise", "base_height"}
    extra = set(doc) - known
    if extra:
        raise ScenarioError(f"unknown scenario keys: {sorted(extra)}")
    try:
        model = _model_from(doc.get("robot"), Path(base_dir) if base_dir else None)
        t_doc = dict(doc.get("terrain") or {})
        terrain = terr.preset(t_doc.pop("preset", "flat"), **t_doc)
        f_doc = doc.get("follower", {})
        follower = None
        if f_doc is not None:
            f_doc = dict(f_doc)
            if "hip_rom_deg" in f_doc:
                rom = f_doc.pop("hip_rom_deg")
                f_doc["hip_rom"] = None if rom is None else math.radians(float(rom))
            follower = FollowerConfig(**f_doc)
        gait = GaitParams(**(doc.get("gait") or {}))
        commands = [(float(t), tuple(c)) for t, c in (doc.get("commands") or [[0.0, [0, 0, 0]]])]
        for _, c in commands:
            if len(c) != 3:
                raise ScenarioError("each command is (v_x, v_y, omega_z)")
        safety = SafetyThresholds(**(doc.get("safety") or {}))
        return Scenario(
            model=model, terrain=terrain, follower=follower, gait=gait, commands=commands,
            duration=float(doc.get("duration", 10.0)), dt=float(doc.get("physics_dt", 0.005)),
            seed=int(doc.get("seed", 0)), ramp=float(doc.get("ramp", 1.0)),
            init_noise=float(doc.get("init_noise", 0.0)),
            base_height=None if doc.get("base_height") is None else float(doc["base_height"]),
            safety=safety, name=str(doc.get("name", "scenario")),
        )
    except ScenarioError:
        raise
    except (TypeError, ValueError, KeyError) as exc:
        raise ScenarioError(str(exc)) from exc


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioError(f"cannot read {path}: {exc}") from exc
    return parse_scenario(text, base_dir=path.parent)


def bundled_scenario_path(name: str) -> Path:
    here = Path(__file__).parent / "data" / "scenarios"
    p = here / (name if name.endswith(".scn") else name + ".scn")
    if not p.exists():
        raise ScenarioError(f"no bundled scenario {name!r}")
    return p


def bundled_scenarios() -> list:
    return sorted(p.name for p in (Path(__file__).parent / "data" / "scenarios").glob("*.scn"))
