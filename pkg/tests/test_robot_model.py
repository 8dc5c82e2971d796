import numpy as np
import pytest

from wbfollower.robot_model import (
    ParseError,
    ValidationError,
    dump_model,
    load_bundled,
    load_model,
    models_equal,
)

PENDULUM = """
schema_version: 1
name: pendulum
base:
  name: base
  mass: 2.0
  inertia: [0.1, 0.1, 0.1]
links:
- name: arm
  parent: base
  mass: 1.0
  com: [0, 0, -0.5]
  inertia: [1.0e-6, 1.0e-6, 1.0e-6]
  joint:
    type: revolute
    axis: [0, 1, 0]
    limits: {lower: -3.0, upper: 3.0, velocity: 10.0, effort_min: -5.0, effort_max: 5.0}
"""


def test_pendulum_minimal_tree():
    m = load_model(PENDULUM)
    assert m.n_joints == 1
    assert m.n_feet == 0
    assert m.nv == 7
    assert m.joint_names == ["arm"]


def test_bundled_hexapod():
    m = load_bundled()
    assert m.n_joints == 18
    assert m.n_feet == 6
    assert m.total_mass == pytest.approx(30.0)
    assert np.all(m.q_min < m.q_max)
    assert np.all(m.tau_min < 0) and np.all(m.tau_max > 0)
    np.testing.assert_allclose(m.tau_max, 20.0)
    # nominal stance within limits
    assert np.all((m.q_nominal > m.q_min) & (m.q_nominal < m.q_max))


def test_inverted_limits_name_the_joint():
    bad = PENDULUM.replace("lower: -3.0, upper: 3.0", "lower: 3.0, upper: 3.0")
    with pytest.raises(ValidationError, match="arm"):
        load_model(bad)


@pytest.mark.parametrize(
    "old,new,match",
    [
        ("inertia: [1.0e-6, 1.0e-6, 1.0e-6]", "inertia: [1.0e-6, -1.0e-6, 1.0e-6]", r"arm\].inertia"),
        ("mass: 1.0", "mass: 0.0", r"arm\].mass"),
        ("parent: base", "parent: nowhere", r"arm\].parent"),
        ("effort_min: -5.0", "effort_min: 1.0", "arm"),
        ("axis: [0, 1, 0]", "axis: [0, 2, 0]", "axis"),
    ],
)
def test_validation_errors(old, new, match):
    with pytest.raises(ValidationError, match=match):
        load_model(PENDULUM.replace(old, new))


def test_cycle_rejected():
    text = PENDULUM + """
- name: a
  parent: b
  mass: 1.0
  inertia: [1, 1, 1]
  joint: {axis: [0, 0, 1], limits: {lower: -1, upper: 1, effort_min: -1, effort_max: 1}}
- name: b
  parent: a
  mass: 1.0
  inertia: [1, 1, 1]
  joint: {axis: [0, 0, 1], limits: {lower: -1, upper: 1, effort_min: -1, effort_max: 1}}
"""
    with pytest.raises(ValidationError, match=r"links\[a\].parent"):
        load_model(text)


@pytest.mark.parametrize(
    "text,match",
    [
        ("base: [unclosed", "YAML"),
        ("- just\n- a list\n", "mapping"),
        ("name: x\n", "base"),
        (PENDULUM.replace("mass: 1.0", "mass: heavy"), r"arm\].mass"),
        (PENDULUM.replace("com: [0, 0, -0.5]", "com: [0, 0]"), r"arm\].com"),
        (PENDULUM.replace("schema_version: 1", "schema_version: 9"), "schema_version"),
    ],
)
def test_parse_errors(text, match):
    with pytest.raises(ParseError, match=match):
        load_model(text)


def test_too_many_feet():
    text = PENDULUM + "feet:\n" + "".join(
        f"- {{name: f{k}, link: arm, offset: [0, 0, -1], radius: 0.02}}\n" for k in range(3)
    )
    with pytest.raises(ValidationError, match="3c"):
        load_model(text)


def test_deterministic_load():
    text = dump_model(load_bundled())
    a, b = load_model(text), load_model(text)
    assert models_equal(a, b)


def test_round_trip():
    m = load_bundled()
    again = load_model(dump_model(m))
    assert models_equal(m, again)
    again2 = load_model(dump_model(again))
    assert models_equal(again, again2)


def test_with_limits_revalidates():
    m = load_bundled()
    q_min = m.q_min.copy()
    q_min[0] = m.q_max[0] + 0.1
    with pytest.raises(ValidationError):
        m.with_limits(q_min=q_min)


def test_chain_and_joint_index():
    m = load_bundled()
    foot = m.feet[0]
    chain = m.chain(foot.link)
    assert len(chain) == 3
    assert [m.joint_names[j] for j in chain] == ["lf_hip_yaw", "lf_hip_pitch", "lf_knee"]
    assert m.joint_index("lf_knee") == chain[-1]
    with pytest.raises(KeyError):
        m.joint_index("nope")
