"""Hierarchical QP: strict priorities realized by freezing higher-level slacks.

Level p solves, over ``(x, v)``::

    min  |A_p x - b_p|^2 + |v|^2 + reg |x|^2
    s.t. D_p x - f_p <= v,  v >= 0
         A_k x = A_k x_k*            (k < p, equality slack frozen)
         D_k x <= f_k + v_k*         (k < p, inequality slack frozen)

Tasks that share a priority integer are stacked into one level.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .qp_solver import QpProblem, QpStatus, SolverOptions, solve_qp


class LevelInfeasible(RuntimeError):
    def __init__(self, priority, status):
        super().__init__(f"priority level {priority} failed: {status.value}")
        self.priority = priority
        self.status = status


@dataclass
class Task:
    A: np.ndarray
    b: np.ndarray
    D: np.ndarray
    f: np.ndarray
    priority: int
    label: str = ""

    @classmethod
    def equality(cls, A, b, priority, label="", d=None):
        A = np.atleast_2d(np.asarray(A, dtype=float))
        d = A.shape[1] if d is None else d
        return cls(A.reshape(-1, d), np.asarray(b, dtype=float).reshape(-1),
                   np.zeros((0, d)), np.zeros(0), priority, label)

    @classmethod
    def inequality(cls, D, f, priority, label="", d=None):
        D = np.atleast_2d(np.asarray(D, dtype=float))
        d = D.shape[1] if d is None else d
        return cls(np.zeros((0, d)), np.zeros(0), D.reshape(-1, d),
                   np.asarray(f, dtype=float).reshape(-1), priority, label)

    @property
    def dim(self) -> int:
        return max(self.A.shape[1], self.D.shape[1])

    @property
    def kind(self) -> str:
        if self.A.shape[0] and self.D.shape[0]:
            return "mixed"
        return "equality" if self.A.shape[0] or not self.D.shape[0] else "inequality"

    def equality_residual(self, x) -> np.ndarray:
        return self.A @ x - self.b

    def inequality_violation(self, x) -> np.ndarray:
        return np.maximum(self.D @ x - self.f, 0.0)


@dataclass
class LevelResult:
    priority: int
    labels: list
    w_norm: float
    v_norm: float
    status: QpStatus
    iterations: int = 0
    active_set: list = field(default_factory=list)


@dataclass
class HqpSolution:
    x_star: np.ndarray
    levels: list

    @property
    def residuals(self) -> list:
        return [(lv.w_norm, lv.v_norm) for lv in self.levels]

    @property
    def statuses(self) -> list:
        return [lv.status for lv in self.levels]


def group_levels(tasks) -> list:
    """Stack tasks by priority: [(priority, A, b, D, f, labels)] ascending."""
    d = {t.dim for t in tasks}
    if len(d) != 1:
        raise ValueError(f"tasks disagree on column dimension: {sorted(d)}")
    d = d.pop()
    out = []
    for prio in sorted({t.priority for t in tasks}):
        group = [t for t in tasks if t.priority == prio]
        out.append(
            (
                prio,
                np.vstack([t.A for t in group] + [np.zeros((0, d))]),
                np.concatenate([t.b for t in group] + [np.zeros(0)]),
                np.vstack([t.D for t in group] + [np.zeros((0, d))]),
                np.concatenate([t.f for t in group] + [np.zeros(0)]),
                [t.label for t in group],
            )
        )
    return out


def solve_hierarchy(tasks, d=None, reg: float = 1e-9, warm_start=None, tol: float = 1e-9,
                    min_norm: bool = True, refine: int = 4, stat_tol: float = 1e-12) -> HqpSolution:
    """Lexicographically solve prioritized tasks.

    With ``min_norm`` the point returned is the smallest-norm one among all
    optima of the last level; otherwise it is whichever optimum the last
    level's active-set walk stopped at.

    ``warm_start`` (optional) is a starting point for the first level and may
    carry per-level working sets from a previous solve as ``(x, [ws...])``.
    """
    if not tasks:
        raise ValueError("at least one task is required")
    levels = group_levels(tasks)
    dim = levels[0][1].shape[1]
    if d is not None and d != dim:
        raise ValueError(f"tasks have dimension {dim}, expected {d}")

    x = np.zeros(dim)
    hints = None
    if warm_start is not None:
        x, hints = warm_start if isinstance(warm_start, tuple) else (warm_start, None)
        x = np.asarray(x, dtype=float)

    E = np.zeros((0, dim))  # frozen equalities, orthonormal rows
    e = np.zeros(0)
    Dk = np.zeros((0, dim))
    fk = np.zeros(0)
    results = []
    for li, (prio, A, b, D, f, labels) in enumerate(levels):
        m = D.shape[0]
        n = dim + m
        H = np.zeros((n, n))
        H[:dim, :dim] = 2.0 * A.T @ A + reg * np.eye(dim)
        H[dim:, dim:] = 2.0 * np.eye(m)
        g = np.zeros(n)
        g[:dim] = -2.0 * A.T @ b
        frozen = Dk.shape[0]
        G = np.zeros((frozen + 2 * m, n))
        h = np.zeros(frozen + 2 * m)
        G[:frozen, :dim] = Dk
        h[:frozen] = fk
        G[frozen:frozen + m, :dim] = D
        G[frozen:frozen + m, dim:] = -np.eye(m)
        h[frozen:frozen + m] = f
        G[frozen + m:, dim:] = -np.eye(m)
        A_eq = np.hstack([E, np.zeros((E.shape[0], m))])
        y = np.concatenate([x, np.maximum(D @ x - f, 0.0)])
        ws = hints[li] if hints is not None and li < len(hints) else None
        # proximal passes: the reg term is centred on the previous iterate so
        # it keeps every QP strictly convex without biasing the optimum
        center = np.zeros(dim)
        iters = 0
        for _ in range(refine + 1):
            gk = g.copy()
            gk[:dim] -= reg * center
            sol = solve_qp(QpProblem(H, gk, A_eq, e, G, h), SolverOptions(x0=y, working_set=ws, stat_tol=stat_tol))
            if sol.status is not QpStatus.OPTIMAL:
                raise LevelInfeasible(prio, sol.status)
            iters += sol.iterations
            step = np.abs(sol.x_star[:dim] - center).max()
            y, ws, center = sol.x_star, sol.active_set, sol.x_star[:dim]
            if step <= 1e-13 * (1.0 + np.abs(center).max()):
                break
        x = sol.x_star[:dim]
        w = A @ x - b
        v = np.maximum(D @ x - f, 0.0)
        results.append(
            LevelResult(prio, labels, float(np.linalg.norm(w)), float(np.linalg.norm(v)),
                        sol.status, iters, sol.active_set)
        )
        if li == len(levels) - 1 and not min_norm:
            break
        # freeze this level: A x = A x*, D x <= f + v*
        if A.shape[0]:
            stacked = np.vstack([E, A])
            _, s, Vt = np.linalg.svd(stacked, full_matrices=False)
            r = int(np.sum(s > tol * max(1.0, s[0]))) if s.size else 0
            E = Vt[:r]
            e = E @ x
        if m:
            Dk = np.vstack([Dk, D])
            fk = np.concatenate([fk, f + v])
    if min_norm:
        sol = solve_qp(QpProblem(np.eye(dim), np.zeros(dim), E, e, Dk, fk), SolverOptions(x0=x, stat_tol=stat_tol))
        if sol.status is QpStatus.OPTIMAL:
            x = sol.x_star
    return HqpSolution(x_star=x, levels=results)


def working_sets(sol: HqpSolution) -> list:
    return [lv.active_set for lv in sol.levels]
