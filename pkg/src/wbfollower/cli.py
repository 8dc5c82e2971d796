"""Command-line runner: single scenarios, constraint sweeps and sweep verification.

Exit codes: 0 success, 1 other failure, 2 scenario or argument error,
3 numerical divergence, 4 solver fallback budget exceeded.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .follower import MU_OFF, MU_TRUTH, FollowerConfig, Mode, restrict_hip_rom
from .simulator import (
    NumericalDivergence,
    ScenarioError,
    SolverFailureBudgetExceeded,
    bundled_scenario_path,
    load_scenario,
    read_trajectory_csv,
    run_scenario,
    safety_report,
    SafetyThresholds,
    Trajectory,
    write_report,
    write_trajectory_csv,
)

EXIT_OK = 0
EXIT_OTHER = 1
EXIT_PARSE = 2
EXIT_DIVERGED = 3
EXIT_BUDGET = 4

SWEEP_PARAMS = ("mu", "hip_rom", "mode")
SUMMARY_FIELDS = [
    "run", "param", "value", "exit_code", "error", "mean_slip_m", "max_slip_m", "slip_events",
    "torque_events", "collision_events", "max_torque_Nm", "mean_step_length_m", "mean_stride_m",
    "hip_bound_rad", "hip_max_excess_rad", "distance_m", "solver_failures", "csv", "report",
]
VERIFY_FIELDS = ["mean_slip_m", "max_slip_m", "slip_events", "torque_events", "max_torque_Nm",
                 "mean_step_length_m", "mean_stride_m", "hip_max_excess_rad", "distance_m"]

log = logging.getLogger("wbfollower")


def resolve_scenario(ref: str) -> Path:
    p = Path(ref)
    if p.exists():
        return p
    return bundled_scenario_path(ref)


def parse_mu(text):
    if text is None:
        return None
    t = str(text).strip().lower()
    if t in ("off", "none", "disabled"):
        return MU_OFF
    if t == MU_TRUTH:
        return MU_TRUTH
    try:
        mu = float(t)
    except ValueError:
        raise ValueError(f"bad mu value {text!r}") from None
    if mu < 0:
        raise ValueError("mu must be non-negative")
    return mu


def parse_rom(text):
    """Hip ROM in degrees; 'none' disables the override. Returns radians or None."""
    t = str(text).strip().lower()
    if t in ("none", "off", "disabled"):
        return None
    deg = float(t)
    if deg <= 0:
        raise ValueError("hip ROM must be positive")
    return math.radians(deg)


def apply_overrides(scn, overrides: dict):
    """Return a copy of ``scn`` with CLI overrides applied (last writer wins)."""
    fc = scn.follower or FollowerConfig()
    fkw, skw = {}, {}
    for key, val in overrides.items():
        if val is None:
            continue
        if key == "mode":
            fkw["mode"] = Mode(val)
        elif key == "mu":
            fkw["mu"] = val
        elif key == "hip_rom":
            fkw["hip_rom"] = None if val == "none" else val
        elif key == "rate":
            fkw["rate"] = float(val)
        elif key == "duration":
            skw["duration"] = float(val)
        elif key == "seed":
            skw["seed"] = int(val)
        else:
            raise KeyError(key)
        log.info("override %s = %s", key, val)
    if fkw:
        skw["follower"] = dataclasses.replace(fc, **fkw)
    if "rate" in fkw:
        period = 1.0 / fkw["rate"]
        k = math.ceil(period / scn.dt - 1e-9)
        if abs(period / k - scn.dt) > 1e-12:
            skw["dt"] = period / k
            log.info("physics step %g s -> %g s to divide the follower period", scn.dt, skw["dt"])
    return dataclasses.replace(scn, **skw) if skw else scn


def hip_indices(model, pattern="hip_yaw"):
    return [i for i, n in enumerate(model.joint_names) if pattern in n]


def hip_bounds(scn):
    """(indices, q_min, q_max) of the hip joints as the follower sees them."""
    fc = scn.follower or FollowerConfig()
    model = restrict_hip_rom(scn.model, fc.hip_rom, fc.hip_joints)
    idx = hip_indices(scn.model, fc.hip_joints)
    return idx, model.q_min[idx], model.q_max[idx]


def hip_excess(q, lo, hi) -> float:
    if q.size == 0:
        return 0.0
    return float(np.max(np.maximum(q - hi, lo - q)))


def slip_table(report) -> str:
    lines = ["foot        stance slips (mm)"]
    for foot, vals in report.stance_slips.items():
        lines.append(f"{foot:<11} " + " ".join(f"{v * 1000:.1f}" for v in vals))
    return "\n".join(lines)


def _run_one(scenario_ref: str, overrides: dict, outdir: str, tag: str) -> dict:
    """Run a scenario and write its CSV and report; returns a summary row."""
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    row = {"run": tag, "exit_code": EXIT_OK, "error": ""}
    try:
        path = resolve_scenario(scenario_ref)
        scn = apply_overrides(load_scenario(path), overrides)
        traj, report = run_scenario(scn)
    except ScenarioError as exc:
        row.update(exit_code=EXIT_PARSE, error=str(exc))
        return row
    except NumericalDivergence as exc:
        row.update(exit_code=EXIT_DIVERGED, error=str(exc))
        return row
    except SolverFailureBudgetExceeded as exc:
        row.update(exit_code=EXIT_BUDGET, error=str(exc))
        return row
    except (ValueError, KeyError) as exc:
        row.update(exit_code=EXIT_PARSE, error=str(exc))
        return row
    idx, lo, hi = hip_bounds(scn)
    csv_path = out / f"{tag}.csv"
    rep_path = out / f"{tag}_report.json"
    write_trajectory_csv(traj, csv_path)
    extra = {
        "scenario": str(path),
        "overrides": {k: v for k, v in overrides.items() if v is not None},
        "hip_joints": [scn.model.joint_names[i] for i in idx],
        "hip_q_min": lo.tolist(),
        "hip_q_max": hi.tolist(),
        "torque_limit": scn.safety.torque,
        "tau_limit_max": scn.model.tau_max.tolist(),
        "q_min": scn.model.q_min.tolist(),
        "q_max": scn.model.q_max.tolist(),
        "wall_time_s": traj.wall_time,
    }
    write_report(report, rep_path, extra)
    row.update(trajectory_summary(traj, report, idx, lo, hi))
    row.update(csv=csv_path.name, report=rep_path.name)
    row["_text"] = report.summary() + "\n" + slip_table(report)
    return row


def trajectory_summary(traj, report, idx, lo, hi) -> dict:
    bound = float(np.max(hi - lo)) if len(idx) else float("nan")
    return {
        "mean_slip_m": report.mean_slip,
        "max_slip_m": report.max_slip,
        "slip_events": report.slip_events,
        "torque_events": report.torque_events,
        "collision_events": report.collision_events,
        "max_torque_Nm": report.max_torque,
        "mean_step_length_m": report.mean_step_length,
        "mean_stride_m": report.mean_stride,
        "hip_bound_rad": bound,
        "hip_max_excess_rad": hip_excess(traj.q[:, idx], lo, hi),
        "distance_m": float(traj.base_pos[-1, 0] - traj.base_pos[0, 0]),
        "solver_failures": report.solver_failures,
    }


def _common_overrides(args) -> dict:
    return {
        "mode": args.mode,
        "mu": parse_mu(args.mu) if args.mu is not None else None,
        "hip_rom": (parse_rom(args.hip_rom) or "none") if args.hip_rom is not None else None,
        "duration": args.duration,
        "seed": args.seed,
        "rate": args.rate,
    }


def cmd_run(args) -> int:
    try:
        overrides = _common_overrides(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    tag = args.tag or Path(args.scenario).stem
    row = _run_one(args.scenario, overrides, args.output, tag)
    if row["exit_code"] != EXIT_OK:
        print(f"error: {row['error']}", file=sys.stderr)
        return row["exit_code"]
    print(row["_text"])
    print(f"wrote {Path(args.output) / row['csv']} and {Path(args.output) / row['report']}")
    return EXIT_OK


def sweep_values(param: str, values: list) -> list:
    """Parsed sweep values with the constraint-disabled baseline first."""
    if param not in SWEEP_PARAMS:
        raise ValueError(f"parameter must be one of {SWEEP_PARAMS}")
    if param == "mu":
        parsed = [parse_mu(v) for v in values]
        baseline = MU_OFF
    elif param == "hip_rom":
        parsed = [parse_rom(v) or "none" for v in values]
        baseline = "none"
    else:
        parsed = [Mode(v.strip().lower()).value for v in values]
        baseline = Mode.TRAINING.value
    if baseline not in parsed:
        parsed.insert(0, baseline)
    return parsed


def _label(param, value) -> str:
    if param == "hip_rom" and value != "none":
        return f"{math.degrees(value):g}deg"
    return str(value)


def cmd_sweep(args) -> int:
    try:
        values = sweep_values(args.param, [v for v in args.values.split(",") if v.strip()])
        base = _common_overrides(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    jobs = []
    for k, val in enumerate(values):
        ov = dict(base)
        ov[args.param] = val
        jobs.append((args.scenario, ov, args.output, f"{k:02d}_{args.param}_{_label(args.param, val)}"))
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as ex:
            rows = list(ex.map(_run_one, *zip(*jobs)))
    else:
        rows = [_run_one(*j) for j in jobs]
    for row, val in zip(rows, values):
        row["param"] = args.param
        row["value"] = _label(args.param, val)
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "summary.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=SUMMARY_FIELDS, extrasaction="ignore")
        w.writeheader()
        for row in rows:
            w.writerow(row)
    for row in rows:
        status = "ok" if row["exit_code"] == EXIT_OK else f"exit {row['exit_code']}: {row['error']}"
        if row["exit_code"] == EXIT_OK:
            print(f"{row['run']:<28} slip {row['mean_slip_m'] * 1000:6.1f} mm  step "
                  f"{row['mean_step_length_m'] * 1000:6.1f} mm  hip excess {row['hip_max_excess_rad']:+.4f} rad  "
                  f"events {row['slip_events']}/{row['torque_events']}/{row['collision_events']}")
        else:
            print(f"{row['run']:<28} {status}")
    print(f"wrote {out / 'summary.csv'}")
    codes = [r["exit_code"] for r in rows if r["exit_code"] != EXIT_OK]
    return codes[0] if codes else EXIT_OK


def trajectory_from_csv(path) -> Trajectory:
    """Trajectory rebuilt from an exported CSV, with enough fields for the metrics."""
    doc = read_trajectory_csv(path)
    header, data = doc["header"], doc["data"]
    col = {name: i for i, name in enumerate(header)}
    joints = [h[2:] for h in header if h.startswith("q_")]
    feet = [h[8:] for h in header if h.startswith("contact_")]
    pick = lambda names: data[:, [col[n] for n in names]]  # noqa: E731
    T = data.shape[0]
    return Trajectory(
        time=data[:, col["time"]],
        base_pos=pick(["base_x", "base_y", "base_z"]),
        base_rot=np.zeros((T, 3, 3)),
        q=pick([f"q_{n}" for n in joints]),
        v=np.zeros((T, 0)),
        tau=pick([f"tau_{n}" for n in joints]),
        forces=pick([f"F_{n}_{a}" for n in feet for a in "xyz"]).reshape(T, -1, 3),
        foot_pos=pick([f"p_{n}_{a}" for n in feet for a in "xyz"]).reshape(T, -1, 3),
        contact=pick([f"contact_{n}" for n in feet]) > 0.5,
        reference=pick([f"ref_{n}" for n in joints]),
        control_time=np.zeros(0), control_ok=np.zeros(0, dtype=bool), tau_excess=np.zeros(0),
        qp_forces=np.zeros((0, len(feet), 3)), qp_contact=np.zeros((0, len(feet)), dtype=bool),
        qp_bound_violation=np.zeros(0), residuals=[], joint_names=joints, foot_names=feet,
    )


class _Limits:
    def __init__(self, q_min, q_max):
        self.q_min = np.asarray(q_min)
        self.q_max = np.asarray(q_max)


def verify_row(outdir: Path, row: dict, rtol: float = 1e-9) -> list:
    """Recompute a summary row from its run CSV; returns a list of mismatch messages."""
    traj = trajectory_from_csv(outdir / row["csv"])
    rep_doc = json.loads((outdir / row["report"]).read_text())
    th = SafetyThresholds(**rep_doc["thresholds"])
    report = safety_report(traj, _Limits(rep_doc["q_min"], rep_doc["q_max"]), th,
                           int(rep_doc.get("solver_failures", 0)))
    idx = [traj.joint_names.index(n) for n in rep_doc["hip_joints"]]
    got = trajectory_summary(traj, report, idx, np.array(rep_doc["hip_q_min"]), np.array(rep_doc["hip_q_max"]))
    bad = []
    for key in VERIFY_FIELDS:
        a, b = float(row[key]), float(got[key])
        if not math.isclose(a, b, rel_tol=rtol, abs_tol=1e-12):
            bad.append(f"{row['run']}: {key} summary {a!r} recomputed {b!r}")
    return bad


def cmd_verify(args) -> int:
    out = Path(args.directory)
    try:
        with open(out / "summary.csv", newline="") as fh:
            rows = list(csv.DictReader(fh))
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    problems = []
    checked = 0
    for row in rows:
        if int(row["exit_code"]) != EXIT_OK:
            continue
        problems += verify_row(out, row)
        checked += 1
    for p in problems:
        print(p)
    print(f"verified {checked} run(s): {'ok' if not problems else f'{len(problems)} mismatch(es)'}")
    return EXIT_OK if not problems else EXIT_OTHER


def _add_overrides(p):
    p.add_argument("--mode", choices=[m.value for m in Mode], help="follower mode")
    p.add_argument("--mu", help="friction used by the force bounds: a number, 'truth' or 'off'")
    p.add_argument("--hip-rom", help="total hip-yaw range in degrees, or 'none'")
    p.add_argument("--duration", type=float, help="simulated seconds")
    p.add_argument("--seed", type=int)
    p.add_argument("--rate", type=float, help="follower rate in Hz")
    p.add_argument("-o", "--output", default="runs", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wbfollower", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log overrides")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one scenario")
    p.add_argument("scenario", help="scenario file or bundled name (standing, walk, ...)")
    p.add_argument("--tag", help="output file stem")
    _add_overrides(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="run a scenario across constraint settings")
    p.add_argument("scenario")
    p.add_argument("--param", required=True, choices=SWEEP_PARAMS)
    p.add_argument("--values", required=True, help="comma separated, e.g. none,0.5,0.2,0.1")
    p.add_argument("--jobs", type=int, default=1)
    _add_overrides(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("verify", help="recompute a sweep summary from its run CSVs")
    p.add_argument("directory")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("list", help="list bundled scenarios")
    p.set_defaults(func=lambda args: print("\n".join(_bundled())) or EXIT_OK)
    return parser


def _bundled():
    from .simulator import bundled_scenarios

    return [s[:-4] for s in bundled_scenarios()]


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except KeyboardInterrupt:
        return EXIT_OTHER
    except Exception as exc:  # noqa: BLE001
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_OTHER


if __name__ == "__main__":
    sys.exit(main())
