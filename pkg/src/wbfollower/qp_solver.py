"""Dense convex QP by a primal active-set method.

    minimize    0.5 x'Hx + g'x
    subject to  A_eq x = b_eq,  A_in x <= b_in

Equalities are eliminated once through an SVD null-space basis (redundant
but consistent rows are tolerated). A feasible start comes from the caller
or from a phase-1 LP solved by the same active-set engine; phase 2 then
keeps a linearly independent working set of inequalities and takes
null-space Newton steps.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve, qr, solve_triangular


class QpStatus(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    MAX_ITERATIONS = "max_iterations"


class QpError(RuntimeError):
    pass


class Infeasible(QpError):
    pass


class MaxIterations(QpError):
    pass


class Unbounded(QpError):
    pass


@dataclass
class QpProblem:
    H: np.ndarray
    g: np.ndarray
    A_eq: np.ndarray | None = None
    b_eq: np.ndarray | None = None
    A_in: np.ndarray | None = None
    b_in: np.ndarray | None = None

    def __post_init__(self):
        self.H = np.atleast_2d(np.asarray(self.H, dtype=float))
        self.g = np.asarray(self.g, dtype=float).reshape(-1)
        d = self.g.shape[0]
        if self.H.shape != (d, d):
            raise ValueError(f"H must be {d}x{d}")
        if not np.allclose(self.H, self.H.T, rtol=0, atol=1e-10 * max(1.0, np.abs(self.H).max())):
            raise ValueError("H must be symmetric")
        self.A_eq, self.b_eq = _block(self.A_eq, self.b_eq, d, "eq")
        self.A_in, self.b_in = _block(self.A_in, self.b_in, d, "in")
        if self.A_eq.shape[0] > d:
            raise ValueError("more equality rows than variables")

    @property
    def dim(self) -> int:
        return self.g.shape[0]


def _block(A, b, d, what):
    if A is None:
        return np.zeros((0, d)), np.zeros(0)
    A = np.asarray(A, dtype=float).reshape(-1, d)
    b = np.asarray(b, dtype=float).reshape(-1)
    if b.shape[0] != A.shape[0]:
        raise ValueError(f"A_{what} and b_{what} row counts differ")
    return A, b


@dataclass
class SolverOptions:
    feas_tol: float = 1e-8
    stat_tol: float = 1e-8
    max_iter: int | None = None
    regularization: float = 1e-9
    x0: np.ndarray | None = None  # feasible (or nearly) start, skips phase 1
    working_set: list | None = None  # warm-start guess of active inequalities


@dataclass
class QpSolution:
    x_star: np.ndarray
    status: QpStatus
    active_set: list
    objective: float
    iterations: int = 0
    regularization: float = 0.0
    lam_eq: np.ndarray = field(default_factory=lambda: np.zeros(0))
    lam_in: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def ok(self) -> bool:
        return self.status is QpStatus.OPTIMAL

    def raise_for_status(self):
        if self.status is QpStatus.INFEASIBLE:
            raise Infeasible("no point satisfies the constraints")
        if self.status is QpStatus.MAX_ITERATIONS:
            raise MaxIterations("iteration limit reached")
        return self


def _independent_rows(A: np.ndarray, rows: list, tol: float = 1e-9) -> list:
    if not rows:
        return []
    _, R, piv = qr(A[rows].T, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    if diag.size == 0:
        return []
    keep = piv[: int(np.sum(diag > tol * max(1.0, diag[0])))]
    return sorted(rows[i] for i in keep)


class _Engine:
    """Primal active set on ``min 0.5 y'Hy + g'y  s.t.  G y <= h`` (rows unit norm)."""

    def __init__(self, H, g, G, h, stat_tol, feas_tol, linear=False):
        self.H, self.g, self.G, self.h = H, g, G, h
        self.stat_tol = stat_tol
        self.feas_tol = feas_tol
        self.linear = linear
        self.iterations = 0

    def run(self, y, W, max_iter, stop=None):
        G, h, H, g = self.G, self.h, self.H, self.g
        m, n = G.shape
        W = list(W)
        in_w = np.zeros(m, dtype=bool)
        in_w[W] = True
        at_min = False
        degenerate = 0
        dropped = -1
        lam = np.zeros(0)
        while True:
            if self.iterations >= max_iter:
                return y, W, lam, False
            self.iterations += 1
            grad = g if self.linear else H @ y + g
            k = len(W)
            if k:
                Q, R = np.linalg.qr(G[W].T, mode="complete")
                Z = Q[:, k:]
            else:
                Q = R = None
                Z = None
            gz = grad if Z is None else Z.T @ grad
            scale = max(1.0, np.abs(grad).max(initial=0.0))
            if at_min or gz.size == 0 or np.abs(gz).max() <= self.stat_tol * scale:
                at_min = False
                if k == 0:
                    return y, W, lam, True
                lam = solve_triangular(R[:k, :k], -(Q[:, :k].T @ grad))
                bland = degenerate > 2 * n
                if bland:
                    neg = [i for i in range(k) if lam[i] < -self.stat_tol * scale]
                    drop = min(neg, key=lambda i: W[i]) if neg else None
                else:
                    i = int(np.argmin(lam))
                    drop = i if lam[i] < -self.stat_tol * scale else None
                if drop is None:
                    return y, W, lam, True
                dropped, drop_pos = W[drop], drop
                in_w[dropped] = False
                del W[drop]
                continue
            # search direction in the null space of the working set
            step_max = 1.0
            if self.linear:
                pz = -gz
                step_max = np.inf
            else:
                Hz = H if Z is None else Z.T @ H @ Z
                try:
                    c, low = cho_factor(Hz, check_finite=False)
                    if np.abs(np.diag(c)).min() <= 1e-13 * max(1.0, np.abs(np.diag(c)).max()):
                        raise LinAlgError
                    pz = -cho_solve((c, low), gz, check_finite=False)
                except LinAlgError:
                    vals, vecs = np.linalg.eigh(Hz)
                    small = vals <= 1e-12 * max(1.0, np.abs(vals).max())
                    Vs = vecs[:, small]
                    d_null = -Vs @ (Vs.T @ gz)
                    if np.abs(d_null).max(initial=0.0) > 1e-14 * scale:
                        pz = d_null
                        step_max = np.inf
                    else:
                        pz = -np.linalg.pinv(Hz) @ gz
            p = pz if Z is None else Z @ pz
            Gp = G @ p
            pnorm = np.abs(p).max()
            cand = (~in_w) & (Gp > 1e-12 * max(pnorm, 1e-300))
            alpha = step_max
            block = -1
            if cand.any():
                idx = np.flatnonzero(cand)
                slack = np.maximum(h[idx] - G[idx] @ y, 0.0)
                ratios = slack / Gp[idx]
                j = int(np.argmin(ratios))
                if ratios[j] < alpha:
                    alpha = ratios[j]
                    block = int(idx[j])
            if not np.isfinite(alpha):
                raise Unbounded("objective unbounded below on the feasible set")
            if block >= 0 and block == dropped and alpha * pnorm <= 1e-14 * (1.0 + np.abs(y).max()):
                # the row just released blocks at once: its multiplier was round-off
                W.insert(drop_pos, block)
                return y, W, lam, True
            dropped = -1
            y = y + alpha * p
            if block >= 0:
                W.append(block)
                in_w[block] = True
                degenerate = degenerate + 1 if alpha * pnorm <= 1e-14 else 0
            else:
                degenerate = 0
                at_min = not self.linear
            if stop is not None and stop(y):
                return y, W, lam, True


def solve_qp(problem: QpProblem, options: SolverOptions | None = None) -> QpSolution:
    """Solve a dense convex QP; see module docstring for the method."""
    opts = options or SolverOptions()
    P = problem
    d = P.dim
    m = P.A_in.shape[0]
    max_iter = opts.max_iter if opts.max_iter is not None else 10 * (d + m)

    H = P.H
    eps = 0.0
    try:
        cho_factor(H)
    except LinAlgError:
        eps = opts.regularization
        H = H + eps * np.eye(d)

    # eliminate equalities: x = x_p + Z z
    if P.A_eq.shape[0]:
        U, s, Vt = np.linalg.svd(P.A_eq)
        r = int(np.sum(s > 1e-10 * max(1.0, s[0]))) if s.size else 0
        x_p = Vt[:r].T @ ((U[:, :r].T @ P.b_eq) / s[:r])
        if np.abs(P.A_eq @ x_p - P.b_eq).max() > opts.feas_tol * max(1.0, np.abs(P.b_eq).max()):
            return _infeasible(P, eps)
        Z = Vt[r:].T
    else:
        x_p = np.zeros(d)
        Z = np.eye(d)
    nz = Z.shape[1]
    Hr = Z.T @ H @ Z
    gr = Z.T @ (H @ x_p + P.g)

    G = P.A_in @ Z
    hb = P.b_in - P.A_in @ x_p
    norms = np.linalg.norm(G, axis=1)
    live = norms > 1e-12
    if np.any(hb[~live] < -opts.feas_tol):
        return _infeasible(P, eps)
    rows = np.flatnonzero(live)
    Gn = G[rows] / norms[rows, None]
    hn = hb[rows] / norms[rows]

    if opts.x0 is not None:
        z = Z.T @ (np.asarray(opts.x0, dtype=float) - x_p)
    else:
        z = np.zeros(nz)
    iterations = 0

    viol = (Gn @ z - hn).max(initial=0.0)
    if viol > opts.feas_tol * 0.1:
        # phase 1: min t  s.t.  G z - t <= h,  -t <= 0
        k = rows.size
        G1 = np.zeros((k + 1, nz + 1))
        G1[:k, :nz] = Gn
        G1[:k, nz] = -1.0
        G1[k, nz] = -1.0
        nrm = np.linalg.norm(G1, axis=1)
        G1 /= nrm[:, None]
        h1 = np.append(hn, 0.0) / nrm
        g1 = np.zeros(nz + 1)
        g1[nz] = 1.0
        eng1 = _Engine(None, g1, G1, h1, opts.stat_tol, opts.feas_tol, linear=True)
        y0 = np.append(z, viol)
        W0 = _independent_rows(G1, [int(np.argmax(Gn @ z - hn))])
        try:
            y, _, _, done = eng1.run(y0, W0, max_iter, stop=lambda y: y[-1] <= 0.0)
        except Unbounded:
            done, y = False, y0
        iterations += eng1.iterations
        z = y[:nz]
        viol = (Gn @ z - hn).max(initial=0.0)
        if viol > opts.feas_tol:
            if not done:
                return _result(P, x_p + Z @ z, QpStatus.MAX_ITERATIONS, [], iterations, eps, opts)
            return _infeasible(P, eps)

    tight = list(np.flatnonzero(np.abs(Gn @ z - hn) <= 1e-10))
    if opts.working_set is not None:
        # keep hinted rows that are tight at the start, then the remaining tight rows
        pos = {int(r): i for i, r in enumerate(rows)}
        hint = [pos[i] for i in opts.working_set if i in pos and pos[i] in tight]
        tight = hint + [i for i in tight if i not in hint]
    W0 = _independent_rows(Gn, tight) if tight else []
    eng = _Engine(Hr, gr, Gn, hn, opts.stat_tol, opts.feas_tol)
    y, W, lam, done = eng.run(z, W0, max_iter - iterations)
    iterations += eng.iterations
    x = x_p + Z @ y
    status = QpStatus.OPTIMAL if done else QpStatus.MAX_ITERATIONS
    active = sorted(int(rows[i]) for i in W)
    return _result(P, x, status, active, iterations, eps, opts, W=[int(rows[i]) for i in W], lam=lam / norms[rows[W]] if W else None)


def _infeasible(P: QpProblem, eps: float) -> QpSolution:
    return QpSolution(
        x_star=np.full(P.dim, np.nan),
        status=QpStatus.INFEASIBLE,
        active_set=[],
        objective=np.nan,
        regularization=eps,
    )


def _result(P, x, status, active, iterations, eps, opts, W=None, lam=None):
    m = P.A_in.shape[0]
    lam_in = np.zeros(m)
    if W and lam is not None and len(lam) == len(W):
        lam_in[W] = lam
    lam_eq = np.zeros(P.A_eq.shape[0])
    if P.A_eq.shape[0]:
        resid = P.H @ x + P.g + P.A_in.T @ lam_in
        lam_eq = np.linalg.lstsq(P.A_eq.T, -resid, rcond=None)[0]
    obj = 0.5 * x @ P.H @ x + P.g @ x
    return QpSolution(
        x_star=x,
        status=status,
        active_set=active,
        objective=float(obj),
        iterations=iterations,
        regularization=eps,
        lam_eq=lam_eq,
        lam_in=lam_in,
    )


def kkt_residuals(problem: QpProblem, sol: QpSolution) -> dict:
    """Violation of each KKT condition at a returned solution."""
    P, x = problem, sol.x_star
    H = P.H + sol.regularization * np.eye(P.dim)
    stat = H @ x + P.g + P.A_eq.T @ sol.lam_eq + P.A_in.T @ sol.lam_in
    slack = P.A_in @ x - P.b_in
    return {
        "stationarity": float(np.abs(stat).max(initial=0.0)),
        "primal_eq": float(np.abs(P.A_eq @ x - P.b_eq).max(initial=0.0)),
        "primal_in": float(np.maximum(slack, 0.0).max(initial=0.0)),
        "dual": float(np.maximum(-sol.lam_in, 0.0).max(initial=0.0)),
        "complementarity": float(np.abs(sol.lam_in * slack).max(initial=0.0)),
    }
