"""Robot description: kinematic tree, inertias and actuator limits.

Models are loaded from a YAML document (see ``data/hexapod.yaml``). The base
link is floating; every other link hangs off a single revolute joint.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import yaml

SCHEMA_VERSION = 1


class ParseError(ValueError):
    """The configuration text could not be parsed."""


class ValidationError(ValueError):
    """The configuration parsed but violates a model invariant."""


@dataclass(frozen=True)
class JointLimits:
    q_min: float
    q_max: float
    velocity: float
    tau_min: float
    tau_max: float


@dataclass(frozen=True)
class Link:
    name: str
    parent: int  # -1 for the floating base
    mass: float
    com: np.ndarray  # (3,) in link frame
    inertia: np.ndarray  # (3, 3) about the link CoM, link frame
    joint_type: str = "floating"
    axis: np.ndarray = field(default_factory=lambda: np.zeros(3))
    origin_xyz: np.ndarray = field(default_factory=lambda: np.zeros(3))
    origin_rot: np.ndarray = field(default_factory=lambda: np.eye(3))
    origin_rpy: tuple = (0.0, 0.0, 0.0)
    limits: JointLimits | None = None
    q_nominal: float = 0.0


@dataclass(frozen=True)
class Foot:
    name: str
    link: int
    offset: np.ndarray
    radius: float


@dataclass(frozen=True, eq=False)
class RobotModel:
    name: str
    links: tuple
    feet: tuple
    gravity: np.ndarray

    @property
    def n_joints(self) -> int:
        return len(self.links) - 1

    @property
    def n_feet(self) -> int:
        return len(self.feet)

    @property
    def nv(self) -> int:
        return 6 + self.n_joints

    @property
    def total_mass(self) -> float:
        return float(sum(link.mass for link in self.links))

    @property
    def base_mass(self) -> float:
        # total mass carried by the floating base (the whole robot)
        return self.total_mass

    @property
    def joint_names(self) -> list:
        return [link.name for link in self.links[1:]]

    @property
    def q_min(self) -> np.ndarray:
        return np.array([link.limits.q_min for link in self.links[1:]])

    @property
    def q_max(self) -> np.ndarray:
        return np.array([link.limits.q_max for link in self.links[1:]])

    @property
    def tau_min(self) -> np.ndarray:
        return np.array([link.limits.tau_min for link in self.links[1:]])

    @property
    def tau_max(self) -> np.ndarray:
        return np.array([link.limits.tau_max for link in self.links[1:]])

    @property
    def velocity_limits(self) -> np.ndarray:
        return np.array([link.limits.velocity for link in self.links[1:]])

    @property
    def q_nominal(self) -> np.ndarray:
        return np.array([link.q_nominal for link in self.links[1:]])

    @property
    def foot_radii(self) -> np.ndarray:
        return np.array([foot.radius for foot in self.feet])

    def joint_index(self, name: str) -> int:
        """Index of the named joint within ``q_j``."""
        for i, link in enumerate(self.links[1:]):
            if link.name == name:
                return i
        raise KeyError(name)

    def chain(self, link: int) -> list:
        """Joint indices (into ``q_j``) from the base out to ``link``."""
        out = []
        while link > 0:
            out.append(link - 1)
            link = self.links[link].parent
        return out[::-1]

    def with_limits(self, q_min=None, q_max=None) -> "RobotModel":
        """Copy of the model with replaced joint position limits."""
        links = [self.links[0]]
        for i, link in enumerate(self.links[1:]):
            lim = link.limits
            lo = lim.q_min if q_min is None else float(q_min[i])
            hi = lim.q_max if q_max is None else float(q_max[i])
            new_lim = JointLimits(lo, hi, lim.velocity, lim.tau_min, lim.tau_max)
            links.append(_replace(link, limits=new_lim))
        model = RobotModel(self.name, tuple(links), self.feet, self.gravity)
        validate(model)
        return model


def _replace(obj, **changes):
    from dataclasses import replace

    return replace(obj, **changes)


def rpy_to_matrix(rpy) -> np.ndarray:
    """Rotation matrix for fixed-axis roll, pitch, yaw (Rz @ Ry @ Rx)."""
    r, p, y = rpy
    cr, sr = np.cos(r), np.sin(r)
    cp, sp = np.cos(p), np.sin(p)
    cy, sy = np.cos(y), np.sin(y)
    rx = np.array([[1, 0, 0], [0, cr, -sr], [0, sr, cr]])
    ry = np.array([[cp, 0, sp], [0, 1, 0], [-sp, 0, cp]])
    rz = np.array([[cy, -sy, 0], [sy, cy, 0], [0, 0, 1]])
    return rz @ ry @ rx


def _vec(value, what: str, size: int = 3) -> np.ndarray:
    try:
        arr = np.asarray(value, dtype=float).reshape(-1)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"{what}: expected {size} numbers") from exc
    if arr.shape != (size,):
        raise ParseError(f"{what}: expected {size} numbers, got {arr.size}")
    return arr


def _inertia(value, what: str) -> np.ndarray:
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"{what}: not numeric") from exc
    if arr.shape == (3,):
        return np.diag(arr)
    if arr.shape == (6,):
        ixx, iyy, izz, ixy, ixz, iyz = arr
        return np.array([[ixx, ixy, ixz], [ixy, iyy, iyz], [ixz, iyz, izz]])
    if arr.shape == (3, 3):
        return arr
    raise ParseError(f"{what}: expected diag (3), [ixx,iyy,izz,ixy,ixz,iyz] or 3x3")


def _number(section: dict, key: str, what: str, default=None) -> float:
    if key not in section:
        if default is None:
            raise ParseError(f"{what}.{key}: missing")
        return float(default)
    try:
        return float(section[key])
    except (TypeError, ValueError) as exc:
        raise ParseError(f"{what}.{key}: not a number") from exc


def _section(doc, key: str, what: str) -> dict:
    if not isinstance(doc, dict) or key not in doc:
        raise ParseError(f"{what}: missing section '{key}'")
    sec = doc[key]
    if not isinstance(sec, dict):
        raise ParseError(f"{what}.{key}: expected a mapping")
    return sec


def load_model(config_text: str) -> RobotModel:
    """Parse and validate a robot description.

    Raises ``ParseError`` for malformed text or missing fields and
    ``ValidationError`` for invariant violations; both name the field.
    """
    try:
        doc = yaml.safe_load(config_text)
    except yaml.YAMLError as exc:
        raise ParseError(f"invalid YAML: {exc}") from exc
    if not isinstance(doc, dict):
        raise ParseError("robot config: top level must be a mapping")
    version = doc.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ParseError(f"schema_version: unsupported value {version!r}")

    gravity = _vec(doc.get("gravity", [0.0, 0.0, -9.81]), "gravity")
    base = _section(doc, "base", "robot config")
    base_name = str(base.get("name", "base"))
    links = [
        Link(
            name=base_name,
            parent=-1,
            mass=_number(base, "mass", "base"),
            com=_vec(base.get("com", [0, 0, 0]), "base.com"),
            inertia=_inertia(base.get("inertia"), "base.inertia"),
        )
    ]
    index = {base_name: 0}

    raw_links = doc.get("links", [])
    if not isinstance(raw_links, list):
        raise ParseError("links: expected a list")
    for k, raw in enumerate(raw_links):
        if not isinstance(raw, dict) or "name" not in raw:
            raise ParseError(f"links[{k}]: expected a mapping with a name")
        name = str(raw["name"])
        where = f"links[{name}]"
        if name in index:
            raise ValidationError(f"{where}.name: duplicate link name")
        parent_name = raw.get("parent")
        if parent_name not in index:
            # parents must precede children: this also rules out cycles
            raise ValidationError(
                f"{where}.parent: unknown or later-defined link {parent_name!r}"
            )
        joint = _section(raw, "joint", where)
        jtype = str(joint.get("type", "revolute"))
        if jtype != "revolute":
            raise ValidationError(f"{where}.joint.type: only 'revolute' is supported")
        origin = joint.get("origin", {}) or {}
        rpy = tuple(_vec(origin.get("rpy", [0, 0, 0]), f"{where}.joint.origin.rpy"))
        lim = _section(joint, "limits", f"{where}.joint")
        limits = JointLimits(
            q_min=_number(lim, "lower", f"{where}.joint.limits"),
            q_max=_number(lim, "upper", f"{where}.joint.limits"),
            velocity=_number(lim, "velocity", f"{where}.joint.limits", default=np.inf),
            tau_min=_number(lim, "effort_min", f"{where}.joint.limits"),
            tau_max=_number(lim, "effort_max", f"{where}.joint.limits"),
        )
        axis = _vec(joint.get("axis", [0, 0, 1]), f"{where}.joint.axis")
        links.append(
            Link(
                name=name,
                parent=index[parent_name],
                mass=_number(raw, "mass", where),
                com=_vec(raw.get("com", [0, 0, 0]), f"{where}.com"),
                inertia=_inertia(raw.get("inertia"), f"{where}.inertia"),
                joint_type=jtype,
                axis=axis,
                origin_xyz=_vec(origin.get("xyz", [0, 0, 0]), f"{where}.joint.origin.xyz"),
                origin_rot=rpy_to_matrix(rpy),
                origin_rpy=rpy,
                limits=limits,
                q_nominal=_number(joint, "nominal", f"{where}.joint", default=0.0),
            )
        )
        index[name] = len(links) - 1

    feet = []
    raw_feet = doc.get("feet", []) or []
    if not isinstance(raw_feet, list):
        raise ParseError("feet: expected a list")
    for k, raw in enumerate(raw_feet):
        if not isinstance(raw, dict):
            raise ParseError(f"feet[{k}]: expected a mapping")
        name = str(raw.get("name", f"foot{k}"))
        if raw.get("link") not in index:
            raise ValidationError(f"feet[{name}].link: unknown link {raw.get('link')!r}")
        feet.append(
            Foot(
                name=name,
                link=index[raw["link"]],
                offset=_vec(raw.get("offset", [0, 0, 0]), f"feet[{name}].offset"),
                radius=_number(raw, "radius", f"feet[{name}]"),
            )
        )

    model = RobotModel(
        name=str(doc.get("name", "robot")),
        links=tuple(links),
        feet=tuple(feet),
        gravity=gravity,
    )
    validate(model)
    return model


def validate(model: RobotModel) -> None:
    for i, link in enumerate(model.links):
        where = f"links[{link.name}]"
        if i > 0 and not (0 <= link.parent < i):
            raise ValidationError(f"{where}.parent: must precede the link")
        if not link.mass > 0:
            raise ValidationError(f"{where}.mass: must be positive")
        inertia = link.inertia
        if not np.allclose(inertia, inertia.T, atol=1e-12):
            raise ValidationError(f"{where}.inertia: not symmetric")
        if np.linalg.eigvalsh(inertia).min() <= 0:
            raise ValidationError(f"{where}.inertia: not positive definite")
        if i == 0:
            continue
        norm = np.linalg.norm(link.axis)
        if not np.isclose(norm, 1.0, atol=1e-9):
            raise ValidationError(f"{where}.joint.axis: must be a unit vector")
        lim = link.limits
        if not lim.q_min < lim.q_max:
            raise ValidationError(f"{where}.joint.limits: lower must be below upper")
        if not lim.tau_min < 0 < lim.tau_max:
            raise ValidationError(
                f"{where}.joint.limits: need effort_min < 0 < effort_max"
            )
        if not lim.velocity > 0:
            raise ValidationError(f"{where}.joint.limits.velocity: must be positive")
    for foot in model.feet:
        if not foot.radius > 0:
            raise ValidationError(f"feet[{foot.name}].radius: must be positive")
    if 3 * model.n_feet > model.nv:
        raise ValidationError("feet: 3c must not exceed n + 6")


def dump_model(model: RobotModel) -> str:
    """Serialize a model back to the YAML format accepted by ``load_model``."""
    base = model.links[0]

    def inertia(mat):
        return [[float(v) for v in row] for row in mat]

    doc = {
        "schema_version": SCHEMA_VERSION,
        "name": model.name,
        "gravity": [float(v) for v in model.gravity],
        "base": {
            "name": base.name,
            "mass": float(base.mass),
            "com": [float(v) for v in base.com],
            "inertia": inertia(base.inertia),
        },
        "links": [],
        "feet": [],
    }
    for link in model.links[1:]:
        lim = link.limits
        doc["links"].append(
            {
                "name": link.name,
                "parent": model.links[link.parent].name,
                "mass": float(link.mass),
                "com": [float(v) for v in link.com],
                "inertia": inertia(link.inertia),
                "joint": {
                    "type": link.joint_type,
                    "axis": [float(v) for v in link.axis],
                    "origin": {
                        "xyz": [float(v) for v in link.origin_xyz],
                        "rpy": [float(v) for v in link.origin_rpy],
                    },
                    "nominal": float(link.q_nominal),
                    "limits": {
                        "lower": float(lim.q_min),
                        "upper": float(lim.q_max),
                        "velocity": float(lim.velocity),
                        "effort_min": float(lim.tau_min),
                        "effort_max": float(lim.tau_max),
                    },
                },
            }
        )
    for foot in model.feet:
        doc["feet"].append(
            {
                "name": foot.name,
                "link": model.links[foot.link].name,
                "offset": [float(v) for v in foot.offset],
                "radius": float(foot.radius),
            }
        )
    return yaml.safe_dump(doc, sort_keys=False)


def models_equal(a: RobotModel, b: RobotModel) -> bool:
    """Exact structural and numeric equality of two models."""
    if a.name != b.name or len(a.links) != len(b.links) or len(a.feet) != len(b.feet):
        return False
    if not np.array_equal(a.gravity, b.gravity):
        return False
    for la, lb in zip(a.links, b.links):
        if (la.name, la.parent, la.joint_type, la.limits, la.q_nominal) != (
            lb.name,
            lb.parent,
            lb.joint_type,
            lb.limits,
            lb.q_nominal,
        ):
            return False
        if la.mass != lb.mass or tuple(la.origin_rpy) != tuple(lb.origin_rpy):
            return False
        for attr in ("com", "inertia", "axis", "origin_xyz", "origin_rot"):
            if not np.array_equal(getattr(la, attr), getattr(lb, attr)):
                return False
    for fa, fb in zip(a.feet, b.feet):
        if (fa.name, fa.link, fa.radius) != (fb.name, fb.link, fb.radius):
            return False
        if not np.array_equal(fa.offset, fb.offset):
            return False
    return True


def load_model_file(path) -> RobotModel:
    with open(path, encoding="utf-8") as fh:
        return load_model(fh.read())


def bundled_model_path(name: str = "hexapod"):
    from importlib import resources

    return resources.files("wbfollower") / "data" / f"{name}.yaml"


def load_bundled(name: str = "hexapod") -> RobotModel:
    return load_model(bundled_model_path(name).read_text(encoding="utf-8"))
