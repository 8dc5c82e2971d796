import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wbfollower import terrain as terr
from wbfollower.terrain import ContactPoint, TerrainParams, contact_force, update_contact_state
from wbfollower.wbc_tasks import compute_force_bounds


def direct_forces(k_c, k_phi, b_N, a, mu, K, b_T, m, R, delta, delta_dot, xi, xi_dot):
    """Both force magnitudes written out from the terramechanics law."""
    F_N = math.pi * R ** 2 * (k_c / R + k_phi) * delta ** m + b_N * delta_dot
    F_N = max(F_N, 0.0)
    e = math.exp(-1.43 * xi / K)
    F_T = (math.pi * R ** 2 * a + mu * F_N) * (1 - e) / (1 + e) + b_T * abs(xi_dot)
    return F_N, F_T


def random_point(rng):
    p = TerrainParams(
        k_c=10 ** rng.uniform(-1, 4), k_phi=10 ** rng.uniform(4, 8), b_N=rng.uniform(0, 1000),
        a=rng.uniform(0, 2000), mu=rng.uniform(0, 1.5), K=10 ** rng.uniform(-3, -1),
        b_T=rng.uniform(0, 300), m=rng.uniform(0.5, 1.5),
    )
    cp = ContactPoint(delta=rng.uniform(0, 0.05), delta_dot=rng.normal(0, 0.2),
                      xi=rng.uniform(0, 0.05), xi_dot=rng.uniform(0, 0.5))
    return p, rng.uniform(0.005, 0.05), cp


def test_no_penetration_no_force():
    assert contact_force(TerrainParams(), 0.02, ContactPoint(0.0, 0.0)) == (0.0, 0.0)


def test_normal_force_example():
    p = TerrainParams(k_c=1000.0, k_phi=500000.0, b_N=0.0, m=1.0)
    F_N, _ = contact_force(p, 0.02, ContactPoint(0.01, 0.0))
    assert F_N == pytest.approx(math.pi * 4e-4 * 550000 * 0.01, rel=1e-14)
    assert F_N == pytest.approx(6.912, abs=1e-3)


def test_matches_direct_formula_on_random_points():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        p, R, cp = random_point(rng)
        got = contact_force(p, R, cp)
        ref = direct_forces(p.k_c, p.k_phi, p.b_N, p.a, p.mu, p.K, p.b_T, p.m, R,
                            cp.delta, cp.delta_dot, cp.xi, cp.xi_dot)
        assert got[0] == pytest.approx(ref[0], rel=1e-12, abs=1e-12)
        assert got[1] == pytest.approx(ref[1], rel=1e-12, abs=1e-12)


def test_shear_saturation():
    rng = np.random.default_rng(1)
    for _ in range(50):
        p, R, cp = random_point(rng)
        p = TerrainParams(k_c=p.k_c, k_phi=p.k_phi, b_N=p.b_N, a=p.a, mu=p.mu, K=p.K, b_T=0.0, m=p.m)
        cp.xi = 1e3 * p.K
        F_N, F_T = contact_force(p, R, cp)
        limit = math.pi * R ** 2 * p.a + p.mu * F_N
        assert F_T == pytest.approx(limit, rel=1e-6)


def test_normal_force_never_pulls():
    p = TerrainParams()
    F_N, F_T = contact_force(p, 0.02, ContactPoint(1e-4, -50.0, xi=0.01))
    assert F_N == 0.0
    assert F_T == pytest.approx(0.0)


@settings(max_examples=200, deadline=None)
@given(
    delta=st.floats(0, 0.05), delta_dot=st.floats(-2, 2), xi=st.floats(0, 0.1), xi_dot=st.floats(0, 2),
    mu=st.floats(0, 2), a=st.floats(0, 5000),
)
def test_force_bounds_hold(delta, delta_dot, xi, xi_dot, mu, a):
    p = TerrainParams(mu=mu, a=a)
    R = 0.02
    F_N, F_T = contact_force(p, R, ContactPoint(delta, delta_dot, xi, xi_dot))
    assert F_N >= 0.0
    assert F_T <= math.pi * R ** 2 * a + mu * F_N + p.b_T * xi_dot + 1e-9


def test_shear_monotone_in_slip():
    p = TerrainParams(a=300.0)
    vals = [contact_force(p, 0.02, ContactPoint(0.004, 0.0, xi, 0.1))[1] for xi in np.linspace(0, 0.05, 200)]
    assert np.all(np.diff(vals) >= 0.0)


def test_consistent_with_constraint_bounds():
    rng = np.random.default_rng(2)
    for _ in range(200):
        p, R, cp = random_point(rng)
        p = TerrainParams(k_c=p.k_c, k_phi=p.k_phi, b_N=p.b_N, a=p.a, mu=p.mu, K=p.K, b_T=0.0, m=p.m)
        cp.xi_dot = 0.0
        F_N, F_T = contact_force(p, R, cp)
        bounds = compute_force_bounds(p, [True], [F_N], cp.xi, 0.01, [R])
        # the constraint side carries the inscribed-pyramid factor sqrt(2)/2
        assert bounds.F_xy_max[0] * math.sqrt(2.0) == pytest.approx(F_T, rel=1e-12, abs=1e-12)


def test_force_vector_directions():
    p = TerrainParams()
    cp = ContactPoint(0.002, 0.0, xi=0.004, xi_dot=0.1, direction=np.array([1.0, 0.0, 0.0]),
                      slip_vel=np.array([0.1, 0.0, 0.0]))
    F = terr.contact_force_vector(p, 0.02, cp)
    F_N, F_T = contact_force(p, 0.02, cp)
    assert F[2] == pytest.approx(F_N)
    assert F[0] == pytest.approx(-F_T)
    assert F[1] == 0.0


def test_contact_state_examples():
    p = TerrainParams()
    assert update_contact_state(p, [0, 0, 0.001], [0, 0, -1], None, 0.005) is None
    cp = update_contact_state(p, [0, 0, -0.005], [0, 0, 0], None, 0.005)
    assert cp.delta == pytest.approx(0.005)
    assert cp.xi == 0.0
    pos = np.array([0.0, 0.0, -0.005])
    for _ in range(3):
        pos = pos + [0.001, 0.0, 0.0]
        cp = update_contact_state(p, pos, [0.2, 0, 0], cp, 0.005)
    assert cp.xi == pytest.approx(0.003, abs=1e-15)
    np.testing.assert_allclose(cp.direction, [1, 0, 0])
    # lift off and touch down again: slip starts over
    assert update_contact_state(p, [0.003, 0, 0.01], [0, 0, 1], cp, 0.005) is None
    cp = update_contact_state(p, [0.01, 0, -0.001], [0, 0, -0.1], None, 0.005)
    assert cp.xi == 0.0


def test_slip_direction_held_when_still():
    p = TerrainParams()
    cp = update_contact_state(p, [0, 0, -0.001], [0.3, 0.0, 0], None, 0.005)
    np.testing.assert_allclose(cp.direction, [1, 0, 0])
    cp = update_contact_state(p, [0, 0, -0.001], [1e-8, 1e-8, 0], cp, 0.005)
    np.testing.assert_allclose(cp.direction, [1, 0, 0])


def test_slip_capped_anchor_follows():
    p = TerrainParams()
    cp = update_contact_state(p, [0, 0, -0.001], [0, 0, 0], None, 0.005)
    for k in range(1, 40):
        cp = update_contact_state(p, [0.001 * k, 0, -0.001], [0.2, 0, 0], cp, 0.005)
    assert cp.xi == pytest.approx(p.xi_cap)
    # reversing unloads the spring right away
    cp = update_contact_state(p, [0.039 - 0.005, 0, -0.001], [-0.2, 0, 0], cp, 0.005)
    assert cp.xi == pytest.approx(p.xi_cap - 0.005)


def test_presets_and_profiles():
    assert terr.preset("low_friction").mu == 0.15
    assert terr.preset("low_friction", mu=0.3).mu == 0.3
    slope = terr.preset("slope", angle=math.radians(10))
    n = slope.ground.normal(0, 0)
    assert n @ [0, 0, 1] == pytest.approx(math.cos(math.radians(10)))
    assert slope.ground.height(1.0, 5.0) == pytest.approx(math.tan(math.radians(10)))
    stairs = terr.preset("stairs", rise=0.05, run=0.3, start=0.3)
    assert stairs.ground.height(0.0, 0) == 0.0
    assert stairs.ground.height(0.35, 0) == pytest.approx(0.05)
    assert stairs.ground.height(0.65, 0) == pytest.approx(0.10)
    with pytest.raises(ValueError):
        terr.preset("lava")
    with pytest.raises(ValueError):
        terr.preset("flat", rise=0.1)


@pytest.mark.parametrize("field,value", [("k_c", 0.0), ("K", -1.0), ("mu", -0.1), ("m", 0.0), ("b_T", -1.0)])
def test_invalid_params(field, value):
    with pytest.raises(ValueError):
        TerrainParams(**{field: value})


def test_contact_on_slope_uses_local_normal():
    p = terr.preset("slope", angle=math.radians(20))
    z = p.ground.height(0.5, 0.0)
    cp = update_contact_state(p, [0.5, 0.0, z - 0.002], [0, 0, 0], None, 0.005)
    np.testing.assert_allclose(cp.normal, p.ground.normal(0.5, 0.0))
    assert cp.delta == pytest.approx(0.002)
