"""Terramechanics foot-terrain contact.

Normal force follows a Bekker pressure-sinkage law over the foot disc, tangential
force a Janosi-type saturating shear law in the slip displacement::

    F_N = pi R^2 (k_c / R + k_phi) delta^m + b_N delta_dot
    F_T = (pi R^2 a + mu F_N) (1 - e^(-1.43 xi / K)) / (1 + e^(-1.43 xi / K)) + b_T |xi_dot|

The slip displacement is measured from an anchor dropped at touchdown. Once
the shear term is saturated the anchor is dragged along with the foot so a
reversal of slip unloads the spring instead of waiting for the whole slide to
be undone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

XI_CAP_FACTOR = 4.0  # anchor is dragged beyond 4 K (shear factor 0.993)
HOLD_SPEED = 1e-6


class FlatGround:
    kind = "flat"

    def __init__(self, height: float = 0.0):
        self.z0 = float(height)

    def height(self, x, y):
        return self.z0 + 0.0 * np.asarray(x, dtype=float)

    def normal(self, x, y):
        return np.array([0.0, 0.0, 1.0])

    def describe(self) -> dict:
        return {"profile": "flat", "height": self.z0}


class SlopeGround:
    """Inclined plane rising along ``heading`` (rad, world yaw) at ``angle`` rad."""

    kind = "slope"

    def __init__(self, angle: float, heading: float = 0.0, height: float = 0.0):
        self.angle = float(angle)
        self.heading = float(heading)
        self.z0 = float(height)
        self._dir = np.array([math.cos(self.heading), math.sin(self.heading)])

    def height(self, x, y):
        return self.z0 + math.tan(self.angle) * (self._dir[0] * np.asarray(x) + self._dir[1] * np.asarray(y))

    def normal(self, x, y):
        t = math.tan(self.angle)
        n = np.array([-t * self._dir[0], -t * self._dir[1], 1.0])
        return n / np.linalg.norm(n)

    def describe(self) -> dict:
        return {"profile": "slope", "angle": self.angle, "heading": self.heading, "height": self.z0}


class StairsGround:
    """Ascending stairs along +x starting at ``start``; treads are flat."""

    kind = "stairs"

    def __init__(self, rise: float, run: float, start: float = 0.3, steps: int = 20, height: float = 0.0):
        if run <= 0:
            raise ValueError("stair run must be positive")
        self.rise = float(rise)
        self.run = float(run)
        self.start = float(start)
        self.steps = int(steps)
        self.z0 = float(height)

    def height(self, x, y):
        k = np.floor((np.asarray(x, dtype=float) - self.start) / self.run) + 1
        return self.z0 + self.rise * np.clip(k, 0, self.steps)

    def normal(self, x, y):
        return np.array([0.0, 0.0, 1.0])

    def describe(self) -> dict:
        return {"profile": "stairs", "rise": self.rise, "run": self.run, "start": self.start,
                "steps": self.steps, "height": self.z0}


@dataclass(frozen=True)
class TerrainParams:
    k_c: float = 1.0          # N/m^(m+1)
    k_phi: float = 2.0e7      # N/m^(m+2)
    b_N: float = 600.0        # N s/m
    a: float = 0.0            # Pa
    mu: float = 0.8
    K: float = 0.005          # m
    b_T: float = 150.0        # N s/m
    m: float = 1.0
    ground: object = field(default_factory=FlatGround, compare=False)
    name: str = "flat"

    def __post_init__(self):
        if self.k_c <= 0 or self.k_phi <= 0 or self.K <= 0:
            raise ValueError("k_c, k_phi and K must be positive")
        if self.mu < 0 or self.m <= 0:
            raise ValueError("mu must be >= 0 and m > 0")
        if self.b_N < 0 or self.b_T < 0 or self.a < 0:
            raise ValueError("b_N, b_T and a must be non-negative")

    def with_mu(self, mu: float) -> "TerrainParams":
        return replace(self, mu=float(mu))

    @property
    def xi_cap(self) -> float:
        return XI_CAP_FACTOR * self.K


def preset(name: str, **kw) -> TerrainParams:
    """Named terrains: flat, slope(angle), stairs(rise, run), low_friction(mu)."""
    name = name.lower()
    base = {k: kw.pop(k) for k in list(kw) if k in TerrainParams.__dataclass_fields__}
    if name == "flat":
        ground = FlatGround(kw.pop("height", 0.0))
    elif name == "slope":
        ground = SlopeGround(kw.pop("angle", math.radians(10.0)), kw.pop("heading", 0.0), kw.pop("height", 0.0))
    elif name == "stairs":
        ground = StairsGround(kw.pop("rise", 0.03), kw.pop("run", 0.3), kw.pop("start", 0.3),
                              int(kw.pop("steps", 20)), kw.pop("height", 0.0))
    elif name == "low_friction":
        ground = FlatGround(kw.pop("height", 0.0))
        base.setdefault("mu", 0.15)
        base.setdefault("K", 0.01)
    else:
        raise ValueError(f"unknown terrain preset {name!r}")
    if kw:
        raise ValueError(f"unknown terrain options for {name}: {sorted(kw)}")
    base.pop("ground", None)
    base.pop("name", None)
    return TerrainParams(ground=ground, name=name, **base)


@dataclass
class ContactPoint:
    delta: float
    delta_dot: float
    xi: float = 0.0
    xi_dot: float = 0.0
    direction: np.ndarray = field(default_factory=lambda: np.zeros(3))  # unit slip direction
    normal: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 1.0]))
    anchor: np.ndarray = field(default_factory=lambda: np.zeros(3))
    slip_vel: np.ndarray = field(default_factory=lambda: np.zeros(3))


def normal_elastic(params: TerrainParams, R: float, delta: float) -> float:
    if delta <= 0.0:
        return 0.0
    return math.pi * R * R * (params.k_c / R + params.k_phi) * delta ** params.m


def normal_stiffness(params: TerrainParams, R: float, delta: float) -> float:
    """d(elastic F_N)/d(delta)."""
    if delta <= 0.0:
        return 0.0
    return math.pi * R * R * (params.k_c / R + params.k_phi) * params.m * delta ** (params.m - 1.0)


def shear_factor(xi: float, K: float) -> float:
    e = math.exp(-1.43 * xi / K)
    return (1.0 - e) / (1.0 + e)


def contact_force(params: TerrainParams, R: float, cp: ContactPoint) -> tuple:
    """Normal and tangential force magnitudes (F_N, F_T)."""
    if cp.delta < 0:
        raise ValueError("penetration depth must be non-negative")
    F_N = max(0.0, normal_elastic(params, R, cp.delta) + params.b_N * cp.delta_dot)
    F_T = (math.pi * R * R * params.a + params.mu * F_N) * shear_factor(cp.xi, params.K)
    F_T += params.b_T * abs(cp.xi_dot)
    return F_N, F_T


def contact_force_vector(params: TerrainParams, R: float, cp: ContactPoint) -> np.ndarray:
    """World-frame force on the foot: normal push plus shear opposing slip."""
    F_N = max(0.0, normal_elastic(params, R, cp.delta) + params.b_N * cp.delta_dot)
    static = (math.pi * R * R * params.a + params.mu * F_N) * shear_factor(cp.xi, params.K)
    return F_N * cp.normal - static * cp.direction - params.b_T * cp.slip_vel


def update_contact_state(params: TerrainParams, foot_pos, foot_vel, prev: ContactPoint | None, dt: float):
    """Advance one foot's contact bookkeeping; returns None when airborne."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    p = np.asarray(foot_pos, dtype=float)
    v = np.asarray(foot_vel, dtype=float)
    zg = float(params.ground.height(p[0], p[1]))
    if p[2] > zg:
        return None
    n = params.ground.normal(p[0], p[1])
    delta = zg - p[2]
    v_n = float(v @ n)
    v_t = v - v_n * n
    speed = float(np.linalg.norm(v_t))
    if prev is None:
        return ContactPoint(delta=delta, delta_dot=-v_n, xi=0.0, xi_dot=speed,
                            direction=v_t / speed if speed > HOLD_SPEED else np.zeros(3),
                            normal=n, anchor=p.copy(), slip_vel=v_t)
    disp = p - prev.anchor
    disp = disp - (disp @ n) * n
    xi = float(np.linalg.norm(disp))
    anchor = prev.anchor
    if xi > params.xi_cap:
        anchor = p - disp * (params.xi_cap / xi)
        anchor = anchor - ((anchor - p) @ n) * n
        disp = disp * (params.xi_cap / xi)
        xi = params.xi_cap
    if xi > 1e-12:
        direction = disp / xi
    elif speed > HOLD_SPEED:
        direction = v_t / speed
    else:
        direction = prev.direction
    return ContactPoint(delta=delta, delta_dot=-v_n, xi=xi, xi_dot=speed, direction=direction,
                        normal=n, anchor=anchor, slip_vel=v_t)
