import numpy as np
import pytest

from oracles import qp_enumerate
from wbfollower.qp_solver import (
    Infeasible,
    QpProblem,
    QpStatus,
    SolverOptions,
    kkt_residuals,
    solve_qp,
)


def random_qp(rng, d=None, m=None, p=None, psd=False):
    d = d or int(rng.integers(1, 7))
    m = int(rng.integers(0, 9)) if m is None else m
    p = int(rng.integers(0, d)) if p is None else p
    L = rng.normal(size=(d, d if not psd else max(1, d - 1)))
    H = L @ L.T + (0.0 if psd else 0.1 * np.eye(d))
    g = rng.normal(size=d)
    A_eq = rng.normal(size=(p, d))
    x_feas = rng.normal(size=d)
    b_eq = A_eq @ x_feas
    A_in = rng.normal(size=(m, d))
    b_in = A_in @ x_feas + rng.uniform(0, 1, size=m)
    return QpProblem(H, g, A_eq, b_eq, A_in, b_in)


def test_unconstrained_identity():
    sol = solve_qp(QpProblem(np.eye(3), np.zeros(3)))
    assert sol.ok
    assert np.allclose(sol.x_star, 0.0)
    assert sol.objective == 0.0


def test_halfspace_projection():
    sol = solve_qp(QpProblem(np.eye(2), np.zeros(2), A_in=[[-1.0, 0.0]], b_in=[-1.0]))
    assert np.allclose(sol.x_star, [1.0, 0.0])
    assert sol.active_set == [0]


def test_matches_enumeration_oracle():
    rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(300):
        P = random_qp(rng)
        sol = solve_qp(P)
        ref = qp_enumerate(P.H, P.g, P.A_eq, P.b_eq, P.A_in, P.b_in)
        assert sol.ok and ref is not None
        worst = max(worst, np.abs(sol.x_star - ref[0]).max())
    assert worst <= 1e-6


def test_kkt_at_tolerance():
    rng = np.random.default_rng(1)
    for _ in range(200):
        P = random_qp(rng)
        sol = solve_qp(P)
        res = kkt_residuals(P, sol)
        scale = max(1.0, np.abs(P.g).max(), np.abs(P.H).max())
        assert res["primal_eq"] <= 1e-8 * max(1.0, np.abs(P.b_eq).max(initial=0))
        assert res["primal_in"] <= 1e-8
        assert res["dual"] <= 1e-8 * scale
        assert res["stationarity"] <= 1e-7 * scale
        assert res["complementarity"] <= 1e-7 * scale


def test_infeasible_detected():
    P = QpProblem(np.eye(2), np.zeros(2), A_in=[[1.0, 0.0], [-1.0, 0.0]], b_in=[-1.0, -1.0])
    sol = solve_qp(P)
    assert sol.status is QpStatus.INFEASIBLE
    with pytest.raises(Infeasible):
        sol.raise_for_status()


def test_inconsistent_equalities_infeasible():
    P = QpProblem(np.eye(2), np.zeros(2), A_eq=[[1.0, 1.0], [2.0, 2.0]], b_eq=[1.0, 3.0])
    assert solve_qp(P).status is QpStatus.INFEASIBLE


def test_redundant_equalities_tolerated():
    P = QpProblem(np.eye(2), np.zeros(2), A_eq=[[1.0, 1.0], [2.0, 2.0]], b_eq=[1.0, 2.0])
    sol = solve_qp(P)
    assert sol.ok
    assert np.allclose(sol.x_star, [0.5, 0.5])


def test_equalities_fix_every_coordinate():
    P = QpProblem(np.eye(2), np.ones(2), A_eq=np.eye(2), b_eq=[3.0, -1.0], A_in=[[1.0, 0.0]], b_in=[5.0])
    sol = solve_qp(P)
    assert sol.ok
    assert np.allclose(sol.x_star, [3.0, -1.0])


def test_regularization_reported_only_for_psd():
    rng = np.random.default_rng(2)
    pd = solve_qp(random_qp(rng, d=4, m=3))
    assert pd.regularization == 0.0
    psd = solve_qp(random_qp(rng, d=4, m=3, psd=True))
    assert psd.regularization == 1e-9


def test_iteration_cap():
    rng = np.random.default_rng(3)
    P = random_qp(rng, d=6, m=8, p=0)
    sol = solve_qp(P, SolverOptions(max_iter=1))
    assert sol.status in (QpStatus.MAX_ITERATIONS, QpStatus.OPTIMAL)
    if sol.status is QpStatus.MAX_ITERATIONS:
        assert sol.iterations <= 1


def test_deterministic():
    rng = np.random.default_rng(4)
    P = random_qp(rng, d=6, m=8)
    a, b = solve_qp(P), solve_qp(P)
    assert np.array_equal(a.x_star, b.x_star)
    assert a.active_set == b.active_set


def test_warm_start_reproduces_solution():
    rng = np.random.default_rng(5)
    for _ in range(50):
        P = random_qp(rng)
        cold = solve_qp(P)
        warm = solve_qp(P, SolverOptions(x0=cold.x_star, working_set=cold.active_set))
        assert np.abs(warm.x_star - cold.x_star).max() <= 1e-9
        assert warm.iterations <= cold.iterations


def test_rejects_asymmetric_hessian():
    with pytest.raises(ValueError):
        QpProblem(np.array([[1.0, 1.0], [0.0, 1.0]]), np.zeros(2))


def test_rejects_too_many_equalities():
    with pytest.raises(ValueError):
        QpProblem(np.eye(1), np.zeros(1), A_eq=[[1.0], [2.0]], b_eq=[0.0, 0.0])
