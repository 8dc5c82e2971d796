import warnings

import numpy as np
import pytest

from wbfollower.dynamics import GeneralizedState, foot_positions
from wbfollower.gait import (
    GaitParams,
    IkOutOfReach,
    gait_reference,
    leg_fk,
    leg_geometry,
    leg_ik,
    nominal_feet,
    sample_gait,
)
from wbfollower.robot_model import load_bundled


@pytest.fixture(scope="module")
def hexapod():
    return load_bundled()


def test_leg_fk_matches_full_kinematics(hexapod):
    rng = np.random.default_rng(0)
    legs = leg_geometry(hexapod)
    for _ in range(5):
        q = hexapod.q_nominal + rng.normal(0, 0.3, 18)
        st = GeneralizedState.at_rest(hexapod, q_j=q)
        feet = foot_positions(hexapod, st).reshape(-1, 3)
        for k, leg in enumerate(legs):
            np.testing.assert_allclose(leg_fk(leg, q[list(leg.joints)]), feet[k] - st.base_pos, atol=1e-12)


def test_ik_round_trip(hexapod):
    rng = np.random.default_rng(1)
    home = nominal_feet(hexapod)
    for k, leg in enumerate(leg_geometry(hexapod)):
        for _ in range(50):
            target = home[k] + rng.uniform(-0.06, 0.06, 3)
            q, ok = leg_ik(leg, target)
            assert ok
            np.testing.assert_allclose(leg_fk(leg, q), target, atol=1e-9)


def test_ik_out_of_reach_is_clamped(hexapod):
    leg = leg_geometry(hexapod)[0]
    far = leg.mount + leg.mount_rot @ np.array([5.0, 0.0, 0.0])
    q, ok = leg_ik(leg, far)
    assert not ok
    reach = leg.L1 + leg.L2 + leg.L3
    assert np.linalg.norm(leg_fk(leg, q) - leg.mount) == pytest.approx(reach, rel=1e-9)


def test_standing_command_gives_nominal_posture(hexapod):
    for t in np.linspace(0.0, 2.0, 17):
        np.testing.assert_allclose(gait_reference(t, (0, 0, 0), hexapod), hexapod.q_nominal, atol=1e-12)


def test_tripods_alternate_with_half_duty(hexapod):
    params = GaitParams(period=0.8)
    ts = np.arange(0.0, 1.6, 0.01)
    stance = np.array([sample_gait(t, (0.3, 0, 0), hexapod, params).stance for t in ts])
    np.testing.assert_allclose(stance.mean(axis=0), 0.5, atol=0.02)
    names = [f.name.split("_")[0] for f in hexapod.feet]
    first = [names.index(n) for n in params.tripods[0]]
    second = [names.index(n) for n in params.tripods[1]]
    for row in stance:
        assert len(set(row[first])) == 1 and len(set(row[second])) == 1
        assert row[first[0]] != row[second[0]]


def test_stance_feet_move_backward_at_command_speed(hexapod):
    params = GaitParams(period=0.8)
    v = 0.5
    dt = 1e-3
    for t in (0.05, 0.17, 0.29, 0.45, 0.6):
        a = sample_gait(t, (v, 0, 0), hexapod, params)
        b = sample_gait(t + dt, (v, 0, 0), hexapod, params)
        for k in np.flatnonzero(a.stance & b.stance):
            vel = (b.foot_targets[k] - a.foot_targets[k]) / dt
            np.testing.assert_allclose(vel, [-v, 0.0, 0.0], atol=1e-9)


def test_swing_lifts_the_foot(hexapod):
    params = GaitParams(period=0.8, step_height=0.05)
    home = nominal_feet(hexapod)
    heights = []
    for t in np.arange(0.0, 0.8, 0.005):
        s = sample_gait(t, (0.3, 0, 0), hexapod, params)
        heights.append(s.foot_targets[:, 2] - home[:, 2])
    heights = np.array(heights)
    np.testing.assert_allclose(heights.max(axis=0), 0.05, atol=1e-3)
    assert heights.min() >= -1e-12


def test_command_caps(hexapod):
    with pytest.raises(ValueError):
        gait_reference(0.0, (2.0, 0, 0), hexapod)
    with pytest.raises(ValueError):
        gait_reference(0.0, (0, 0, 3.0), hexapod)


def test_unreachable_reference_warns(hexapod):
    params = GaitParams(period=8.0, max_speed=10.0)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        gait_reference(0.0, (9.0, 0, 0), hexapod, params)
    assert any(issubclass(w.category, IkOutOfReach) for w in caught)


def test_bad_tripod_grouping(hexapod):
    with pytest.raises(ValueError, match="tripod"):
        sample_gait(0.0, (0.3, 0, 0), hexapod, GaitParams(tripods=(("lf", "rm"), ("rf", "lm", "rr"))))
