import warnings

import numpy as np
import pytest

from wbfollower.hqp_cascade import LevelInfeasible, Task, group_levels, solve_hierarchy, working_sets
from wbfollower.qp_solver import QpStatus


def random_levels(rng, d=None, n_levels=3):
    d = d or int(rng.integers(1, 6))
    levels = []
    for _ in range(n_levels):
        ne = int(rng.integers(0, 4))
        ni = int(rng.integers(0, 4))
        if ne + ni == 0:
            ne = 1
        levels.append((rng.normal(size=(ne, d)), rng.normal(size=ne),
                       rng.normal(size=(ni, d)), rng.normal(size=ni)))
    return d, levels


def as_tasks(levels):
    return [Task(A, b, D, f, p, f"L{p}") for p, (A, b, D, f) in enumerate(levels)]


def level_cost(level, x):
    A, b, D, f = level
    return np.sum((A @ x - b) ** 2) + np.sum(np.maximum(D @ x - f, 0.0) ** 2)


def test_square_invertible_equality():
    A = np.array([[2.0, 1.0], [1.0, 3.0]])
    b = np.array([1.0, -1.0])
    sol = solve_hierarchy([Task.equality(A, b, 0)])
    assert np.allclose(sol.x_star, np.linalg.solve(A, b), atol=1e-12)
    assert sol.levels[0].w_norm <= 1e-12


def test_conflicting_levels_higher_wins():
    sol = solve_hierarchy([Task.equality([[1.0]], [1.0], 0), Task.equality([[1.0]], [2.0], 1)])
    assert abs(sol.x_star[0] - 1.0) <= 1e-12
    assert abs(sol.levels[1].w_norm - 1.0) <= 1e-12


def test_inequality_level_is_respected_by_lower_equality():
    tasks = [Task.inequality([[1.0, 0.0]], [0.5], 0), Task.equality(np.eye(2), [2.0, 3.0], 1)]
    sol = solve_hierarchy(tasks)
    assert np.allclose(sol.x_star, [0.5, 3.0], atol=1e-10)
    assert sol.statuses == [QpStatus.OPTIMAL, QpStatus.OPTIMAL]


def test_same_priority_tasks_stack():
    tasks = [Task.equality([[1.0, 0.0]], [1.0], 0, "a"), Task.equality([[0.0, 1.0]], [2.0], 0, "b")]
    levels = group_levels(tasks)
    assert len(levels) == 1 and levels[0][5] == ["a", "b"]
    assert np.allclose(solve_hierarchy(tasks).x_star, [1.0, 2.0])


def test_underdetermined_returns_minimum_norm():
    sol = solve_hierarchy([Task.equality([[1.0, 1.0]], [2.0], 0)])
    assert np.allclose(sol.x_star, [1.0, 1.0], atol=1e-10)


def test_dimension_mismatch_rejected():
    with pytest.raises(ValueError):
        solve_hierarchy([Task.equality(np.eye(2), np.zeros(2), 0), Task.equality(np.eye(3), np.zeros(3), 1)])
    with pytest.raises(ValueError):
        solve_hierarchy([])


def test_matches_sequential_oracle():
    pytest.importorskip("cvxpy")
    from oracles import hqp_sequential

    rng = np.random.default_rng(11)
    worst = 0.0
    for _ in range(60):
        d, levels = random_levels(rng)
        x = solve_hierarchy(as_tasks(levels)).x_star
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            ref = hqp_sequential(levels, d)
        worst = max(worst, np.abs(x - ref).max() / max(1.0, np.abs(ref).max()))
    assert worst <= 1e-6


def test_priority_dominance():
    rng = np.random.default_rng(12)
    for _ in range(60):
        d, levels = random_levels(rng)
        base = solve_hierarchy(as_tasks(levels))
        k = int(rng.integers(1, len(levels)))
        pert = [tuple(x.copy() for x in lv) for lv in levels]
        for j in range(k, len(levels)):
            A, b, D, f = pert[j]
            pert[j] = (A, b + rng.normal(size=b.shape), D, f + rng.normal(size=f.shape))
        other = solve_hierarchy(as_tasks(pert))
        for j in range(k):
            assert abs(base.levels[j].w_norm - other.levels[j].w_norm) <= 1e-8
            assert abs(base.levels[j].v_norm - other.levels[j].v_norm) <= 1e-8


def test_monotone_when_appending_lower_task():
    rng = np.random.default_rng(13)
    for _ in range(60):
        d, levels = random_levels(rng)
        before = solve_hierarchy(as_tasks(levels[:2]))
        after = solve_hierarchy(as_tasks(levels))
        for j in range(2):
            c0 = level_cost(levels[j], before.x_star)
            c1 = level_cost(levels[j], after.x_star)
            assert c1 <= c0 + 1e-8 * max(1.0, c0)


def test_slack_nonnegative_and_lexicographic():
    rng = np.random.default_rng(14)
    for _ in range(60):
        d, levels = random_levels(rng)
        sol = solve_hierarchy(as_tasks(levels))
        for lv in sol.levels:
            assert lv.v_norm >= -1e-10
        # the first level alone cannot do better than the full cascade reports
        alone = solve_hierarchy(as_tasks(levels[:1]))
        assert level_cost(levels[0], sol.x_star) <= level_cost(levels[0], alone.x_star) + 1e-9


def test_warm_start_idempotent():
    rng = np.random.default_rng(15)
    for _ in range(60):
        d, levels = random_levels(rng)
        tasks = as_tasks(levels)
        sol = solve_hierarchy(tasks)
        again = solve_hierarchy(tasks, warm_start=(sol.x_star, working_sets(sol)))
        assert np.abs(again.x_star - sol.x_star).max() <= 1e-10 * max(1.0, np.abs(sol.x_star).max())


def test_level_infeasible_carries_priority():
    err = LevelInfeasible(3, QpStatus.INFEASIBLE)
    assert err.priority == 3 and "3" in str(err)


def test_task_helpers():
    t = Task.inequality([[1.0, 0.0]], [1.0], 2, "lim")
    assert t.kind == "inequality" and t.dim == 2
    assert np.allclose(t.inequality_violation(np.array([3.0, 0.0])), [2.0])
    e = Task.equality([[1.0, 1.0]], [1.0], 0)
    assert e.kind == "equality"
    assert np.allclose(e.equality_residual(np.array([1.0, 1.0])), [1.0])
