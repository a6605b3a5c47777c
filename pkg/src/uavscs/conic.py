"""Small dense barrier-Newton solver for the two convex subproblem shapes of the pipeline.

* PsdLogProgram: maximize  sum_i c_i log(<A_i, X> + b_i) + <L, X>  over Hermitian PSD
  blocks X, subject to linear inequalities <G, X> <= g.
* WaypointProgram: maximize a linear objective over stacked 2-D waypoints subject to
  norm-ball and linear inequality (and optional equality) constraints.

Both are solved by the same primal path-following method: log-det and log barriers,
damped Newton centering with a backtracking line search that guards the domain, and
a geometric increase of the barrier weight t until the duality-gap bound nu/t drops
below the tolerance.  Callers must supply strictly feasible starts for PSD programs;
waypoint programs tolerate starts that sit exactly on their constraints.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.linalg as sla

OPTIMAL = "optimal"
MAX_ITER = "max_iter"
INFEASIBLE_START = "infeasible_start"


# --------------------------------------------------------------------------- problem types

@dataclass
class LogTerm:
    """c * log(sum_blk <A_blk, X_blk> + b).  ``mats`` maps block index -> Hermitian matrix."""

    coef: float
    mats: dict
    const: float


@dataclass
class LinearConstraint:
    """sum_blk <G_blk, X_blk> <= rhs."""

    mats: dict
    rhs: float


@dataclass
class PsdLogProgram:
    dims: Sequence[int]
    log_terms: list = field(default_factory=list)
    linear: dict = field(default_factory=dict)
    constraints: list = field(default_factory=list)
    constant: float = 0.0


@dataclass
class BallConstraint:
    """||S x - center|| <= radius."""

    S: np.ndarray
    center: np.ndarray
    radius: float


@dataclass
class WaypointProgram:
    """Maximize objective @ x over x in R^(2 n_points)."""

    n_points: int
    objective: np.ndarray
    balls: list = field(default_factory=list)
    G: Optional[np.ndarray] = None
    g: Optional[np.ndarray] = None
    A_eq: Optional[np.ndarray] = None
    b_eq: Optional[np.ndarray] = None


@dataclass
class ConicSolution:
    x: np.ndarray
    objective: float
    stationarity: float
    primal_feasibility: float
    complementarity: float
    iterations: int
    status: str
    message: str = ""
    blocks: Optional[list] = None
    history: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.status == OPTIMAL

    def history_rows(self):
        """Rows (iteration, barrier weight t, objective, stationarity, complementarity)."""
        return list(self.history)


# --------------------------------------------------------------------------- Hermitian coordinates

def hermitian_basis(n: int) -> np.ndarray:
    """Real-coordinate basis of n x n Hermitian matrices: diagonal, then (Re, Im) pairs."""
    basis = []
    for i in range(n):
        E = np.zeros((n, n), dtype=complex)
        E[i, i] = 1.0
        basis.append(E)
    for i in range(n):
        for j in range(i + 1, n):
            E = np.zeros((n, n), dtype=complex)
            E[i, j] = E[j, i] = 1.0
            basis.append(E)
            E = np.zeros((n, n), dtype=complex)
            E[i, j], E[j, i] = 1j, -1j
            basis.append(E)
    return np.array(basis)


def to_coords(X: np.ndarray) -> np.ndarray:
    """Coordinates x with X = sum_k x_k E_k."""
    n = X.shape[0]
    out = [X[i, i].real for i in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            out.extend((X[i, j].real, X[i, j].imag))
    return np.array(out, dtype=float)


def dual_coords(A: np.ndarray, basis: np.ndarray) -> np.ndarray:
    """a with <A, X> = Re tr(A X) = a @ x for Hermitian A."""
    return np.real(np.einsum("ij,kji->k", A, basis))


# --------------------------------------------------------------------------- barrier core

class _Barrier:
    """Objective f (to maximize) and barrier Phi over a real coordinate vector."""

    def __init__(self, dim: int):
        self.dim = dim
        self.lin = np.zeros(dim)
        self.log_c = np.zeros(0)
        self.log_A = np.zeros((0, dim))
        self.log_b = np.zeros(0)
        self.G = np.zeros((0, dim))
        self.g = np.zeros(0)
        self.balls: tuple = ()  # stacked (S (B,k,d), centers (B,k), squared radii (B,))
        self.psd: list = []  # (offset, basis)
        self.A_eq = None
        self.b_eq = None
        self.const = 0.0

    @property
    def nu(self) -> float:
        n_balls = self.balls[0].shape[0] if self.balls else 0
        return float(self.G.shape[0] + n_balls + sum(b.shape[1] for _, b in self.psd))

    # -- objective --------------------------------------------------------
    def objective(self, x) -> float:
        args = self.log_A @ x + self.log_b
        return float(self.const + self.lin @ x + np.sum(self.log_c * np.log(args)))

    def objective_grad(self, x):
        args = self.log_A @ x + self.log_b
        return self.lin + self.log_A.T @ (self.log_c / args)

    # -- domain -----------------------------------------------------------
    def domain_issue(self, x) -> Optional[str]:
        if self.log_A.shape[0]:
            args = self.log_A @ x + self.log_b
            bad = np.flatnonzero(~(args > 0))
            if bad.size:
                return f"log term {int(bad[0])} argument is not positive"
        if self.G.shape[0]:
            slack = self.g - self.G @ x
            bad = np.flatnonzero(~(slack > 0))
            if bad.size:
                return f"linear constraint {int(bad[0])} has no strict slack"
        if self.balls:
            S, c, r2 = self.balls
            v = S @ x - c
            bad = np.flatnonzero(~(r2 - np.sum(v * v, axis=1) > 0))
            if bad.size:
                return f"ball constraint {int(bad[0])} has no strict slack"
        for i, (off, basis) in enumerate(self.psd):
            X = np.einsum("k,kij->ij", x[off:off + basis.shape[0]], basis)
            try:
                np.linalg.cholesky(X)
            except np.linalg.LinAlgError:
                return f"PSD block {i} is not positive definite"
        return None

    # -- centering function F_t = -t f + Phi ------------------------------
    def F(self, x, t) -> float:
        val = -t * self.objective(x)
        if self.G.shape[0]:
            val -= np.sum(np.log(self.g - self.G @ x))
        if self.balls:
            S, c, r2 = self.balls
            v = S @ x - c
            val -= np.sum(np.log(r2 - np.sum(v * v, axis=1)))
        for off, basis in self.psd:
            X = np.einsum("k,kij->ij", x[off:off + basis.shape[0]], basis)
            val -= 2.0 * np.sum(np.log(np.real(np.diag(np.linalg.cholesky(X)))))
        return float(val)

    def grad_hess(self, x, t):
        args = self.log_A @ x + self.log_b
        grad = -t * (self.lin + self.log_A.T @ (self.log_c / args))
        w = t * self.log_c / args ** 2
        hess = (self.log_A.T * w) @ self.log_A
        if self.G.shape[0]:
            inv = 1.0 / (self.g - self.G @ x)
            grad += self.G.T @ inv
            hess += (self.G.T * inv ** 2) @ self.G
        if self.balls:
            S, c, r2 = self.balls
            v = S @ x - c
            s = r2 - np.sum(v * v, axis=1)
            Sv = np.einsum("bkd,bk->bd", S, v)
            grad += 2.0 * np.sum(Sv / s[:, None], axis=0)
            hess += 2.0 * np.einsum("bkd,bke,b->de", S, S, 1.0 / s)
            hess += 4.0 * (Sv.T / s ** 2) @ Sv
        for off, basis in self.psd:
            k = basis.shape[0]
            X = np.einsum("k,kij->ij", x[off:off + k], basis)
            Y = np.linalg.inv(X)
            Y = 0.5 * (Y + Y.conj().T)
            YE = Y @ basis
            grad[off:off + k] -= np.real(np.einsum("kii->k", YE))
            hess[off:off + k, off:off + k] += np.real(np.einsum("kij,lji->kl", YE, YE))
        return grad, hess


def _newton_direction(grad, hess, A_eq):
    n = grad.size
    if A_eq is None or A_eq.shape[0] == 0:
        try:
            c = sla.cho_factor(hess, check_finite=False)
            return sla.cho_solve(c, -grad, check_finite=False)
        except (np.linalg.LinAlgError, sla.LinAlgError):
            return np.linalg.lstsq(hess + 1e-12 * np.eye(n) * max(1.0, np.trace(hess) / n),
                                   -grad, rcond=None)[0]
    q = A_eq.shape[0]
    kkt = np.block([[hess, A_eq.T], [A_eq, np.zeros((q, q))]])
    rhs = np.concatenate([-grad, np.zeros(q)])
    return np.linalg.lstsq(kkt, rhs, rcond=None)[0][:n]


def _path_follow(bar: _Barrier, x0, tol: float, max_iter: int, mu: float = 10.0,
                 t0: float = 1.0, feasibility=None) -> ConicSolution:
    x = np.array(x0, dtype=float)
    issue = bar.domain_issue(x)
    if issue is not None:
        return ConicSolution(x=x, objective=float("nan"), stationarity=float("inf"),
                             primal_feasibility=float("inf"), complementarity=float("inf"),
                             iterations=0, status=INFEASIBLE_START, message=issue)
    nu = max(bar.nu, 1.0)
    t = t0
    iters = 0
    history = []
    status = MAX_ITER
    stat = float("inf")
    while True:
        # damped Newton centering at weight t
        centered = False
        while iters < max_iter:
            grad, hess = bar.grad_hess(x, t)
            dx = _newton_direction(grad, hess, bar.A_eq)
            lam2 = float(-grad @ dx)
            iters += 1
            if not np.isfinite(lam2) or lam2 <= 2e-10:
                centered = True
                break
            f0 = bar.F(x, t)
            step = 1.0
            while step > 1e-14:
                xn = x + step * dx
                if bar.domain_issue(xn) is None:
                    fn = bar.F(xn, t)
                    if fn <= f0 - 0.25 * step * lam2:
                        break
                step *= 0.5
            if step <= 1e-14 or f0 - fn <= 1e-15 * max(1.0, abs(f0)):
                # no further progress representable in floating point
                if step > 1e-14:
                    x = xn
                centered = True
                break
            x = xn
        grad, _ = bar.grad_hess(x, t)
        fgrad = bar.objective_grad(x)
        stat = float(np.linalg.norm(grad) / (t * (1.0 + np.linalg.norm(fgrad))))
        history.append((iters, t, bar.objective(x), stat, nu / t))
        if not centered:
            break
        if nu / t <= tol:
            status = OPTIMAL
            break
        t *= mu
    feas = feasibility(x) if feasibility is not None else 0.0
    if status == OPTIMAL and (stat > max(tol, 1e-6) or feas > tol):
        status = MAX_ITER
    msg = "" if status == OPTIMAL else "iteration cap reached before the gap tolerance"
    return ConicSolution(x=x, objective=bar.objective(x), stationarity=stat,
                         primal_feasibility=feas, complementarity=nu / t, iterations=iters,
                         status=status, message=msg, history=history)


# --------------------------------------------------------------------------- PSD log programs

def _block_offsets(dims):
    offs, o = [], 0
    for n in dims:
        offs.append(o)
        o += n * n
    return offs, o


def solve_psd_log(p: PsdLogProgram, start: Sequence[np.ndarray], tol: float = 1e-6,
                  max_iter: int = 400) -> ConicSolution:
    """Maximize the log-affine program from a strictly feasible list of start blocks."""
    offs, dim = _block_offsets(p.dims)
    bases = [hermitian_basis(n) for n in p.dims]
    bar = _Barrier(dim)
    bar.const = p.constant

    def row(mats):
        r = np.zeros(dim)
        for blk, A in mats.items():
            r[offs[blk]:offs[blk] + p.dims[blk] ** 2] += dual_coords(np.asarray(A), bases[blk])
        return r

    bar.lin = row(p.linear)
    if p.log_terms:
        bar.log_c = np.array([lt.coef for lt in p.log_terms], dtype=float)
        if np.any(bar.log_c < 0):
            raise ValueError("log-term coefficients must be nonnegative for concavity")
        bar.log_A = np.array([row(lt.mats) for lt in p.log_terms])
        bar.log_b = np.array([lt.const for lt in p.log_terms], dtype=float)
    if p.constraints:
        bar.G = np.array([row(c.mats) for c in p.constraints])
        bar.g = np.array([c.rhs for c in p.constraints], dtype=float)
    bar.psd = [(o, b) for o, b in zip(offs, bases)]

    x0 = np.concatenate([to_coords(np.asarray(X, dtype=complex)) for X in start])

    def infeasibility(x):
        viol = 0.0
        if bar.G.shape[0]:
            viol = max(viol, float(np.max(bar.G @ x - bar.g, initial=0.0)))
        return viol

    sol = _path_follow(bar, x0, tol, max_iter, feasibility=infeasibility)
    blocks = []
    for o, n, basis in zip(offs, p.dims, bases):
        X = np.einsum("k,kij->ij", sol.x[o:o + n * n], basis)
        blocks.append(0.5 * (X + X.conj().T))
    sol.blocks = blocks
    return sol


# --------------------------------------------------------------------------- waypoint programs

def _relax_amount(violation: float, scale: float) -> Optional[float]:
    base = 1e-9 * max(1.0, scale)
    if violation <= 0:
        return base
    if violation <= 1e-6 * max(1.0, scale):
        return violation + base
    return None


def solve_waypoints(p: WaypointProgram, start, tol: float = 1e-6,
                    max_iter: int = 400) -> ConicSolution:
    """Maximize p.objective @ x from a feasible (possibly boundary) start.

    Each inequality is widened by a relative 1e-9 so that starts lying exactly on a
    constraint (a UAV already flying at full speed, a pinned waypoint) become interior.
    """
    x0 = np.asarray(start, dtype=float).ravel()
    dim = 2 * p.n_points
    if x0.size != dim:
        raise ValueError("start has the wrong size")
    bar = _Barrier(dim)
    bar.lin = np.asarray(p.objective, dtype=float).ravel()
    if p.balls:
        k = max(np.atleast_2d(b.S).shape[0] for b in p.balls)
        S_all = np.zeros((len(p.balls), k, dim))
        c_all = np.zeros((len(p.balls), k))
        r2_all = np.zeros(len(p.balls))
        for i, b in enumerate(p.balls):
            S = np.atleast_2d(np.asarray(b.S, dtype=float))
            c = np.atleast_1d(np.asarray(b.center, dtype=float))
            gap = float(np.linalg.norm(S @ x0 - c) - b.radius)
            relax = _relax_amount(gap, b.radius)
            if relax is None:
                return ConicSolution(x=x0, objective=float(bar.lin @ x0),
                                     stationarity=float("inf"), primal_feasibility=gap,
                                     complementarity=float("inf"), iterations=0,
                                     status=INFEASIBLE_START,
                                     message=f"start violates ball constraint {i} by {gap:.3g}")
            S_all[i, :S.shape[0]] = S
            c_all[i, :S.shape[0]] = c
            r2_all[i] = (b.radius + relax) ** 2
        bar.balls = (S_all, c_all, r2_all)
    if p.G is not None and len(p.G):
        G = np.asarray(p.G, dtype=float)
        g = np.asarray(p.g, dtype=float).copy()
        norms = np.linalg.norm(G, axis=1)
        keep = []
        for i in range(G.shape[0]):
            viol = float(G[i] @ x0 - g[i])
            if norms[i] == 0:
                if viol > 1e-9 * max(1.0, abs(g[i])):
                    return ConicSolution(x=x0, objective=float(bar.lin @ x0),
                                         stationarity=float("inf"), primal_feasibility=viol,
                                         complementarity=float("inf"), iterations=0,
                                         status=INFEASIBLE_START,
                                         message=f"constant linear constraint {i} is violated")
                continue
            relax = _relax_amount(viol, abs(g[i]))
            if relax is None:
                return ConicSolution(x=x0, objective=float(bar.lin @ x0),
                                     stationarity=float("inf"), primal_feasibility=viol,
                                     complementarity=float("inf"), iterations=0,
                                     status=INFEASIBLE_START,
                                     message=f"start violates linear constraint {i} by {viol:.3g}")
            g[i] += relax
            keep.append(i)
        bar.G, bar.g = G[keep], g[keep]
    if p.A_eq is not None and len(p.A_eq):
        bar.A_eq = np.asarray(p.A_eq, dtype=float)
        bar.b_eq = np.asarray(p.b_eq, dtype=float)

    def infeasibility(x):
        viol = 0.0
        for b in p.balls:
            viol = max(viol, float(np.linalg.norm(np.asarray(b.S) @ x - b.center) - b.radius))
        if p.G is not None and len(p.G):
            viol = max(viol, float(np.max(np.asarray(p.G) @ x - np.asarray(p.g), initial=0.0)))
        if p.A_eq is not None and len(p.A_eq):
            viol = max(viol, float(np.max(np.abs(np.asarray(p.A_eq) @ x - p.b_eq))))
        return max(viol, 0.0)

    return _path_follow(bar, x0, tol, max_iter, feasibility=infeasibility)


# --------------------------------------------------------------------------- independent checkers

def verify_psd_solution(p: PsdLogProgram, blocks, tol: float = 1e-6) -> list[str]:
    """Re-check a PSD program solution straight from the matrices; returns violations."""
    problems = []
    for i, (n, X) in enumerate(zip(p.dims, blocks)):
        X = np.asarray(X)
        if X.shape != (n, n):
            problems.append(f"block {i} has shape {X.shape}")
            continue
        if not np.allclose(X, X.conj().T, atol=1e-12 * max(1.0, np.abs(X).max())):
            problems.append(f"block {i} not Hermitian")
        lo = np.linalg.eigvalsh(0.5 * (X + X.conj().T)).min()
        if lo < -1e-9 * max(1.0, np.abs(X).max()):
            problems.append(f"block {i} has eigenvalue {lo:.3g}")
    for j, c in enumerate(p.constraints):
        lhs = sum(np.trace(np.asarray(G) @ np.asarray(blocks[b])).real for b, G in c.mats.items())
        if lhs > c.rhs + tol * max(1.0, abs(c.rhs)):
            problems.append(f"constraint {j}: {lhs:.6g} > {c.rhs:.6g}")
    for j, lt in enumerate(p.log_terms):
        arg = lt.const + sum(np.trace(np.asarray(A) @ np.asarray(blocks[b])).real
                             for b, A in lt.mats.items())
        if not arg > 0:
            problems.append(f"log term {j} argument {arg:.3g} not positive")
    return problems


def verify_waypoint_solution(p: WaypointProgram, x, tol: float = 1e-6) -> list[str]:
    problems = []
    x = np.asarray(x, dtype=float)
    for i, b in enumerate(p.balls):
        dist = float(np.sqrt(np.sum((np.dot(b.S, x) - b.center) ** 2)))
        if dist > b.radius + tol * max(1.0, b.radius):
            problems.append(f"ball {i}: {dist:.9g} > {b.radius:.9g}")
    if p.G is not None:
        for i, (row, rhs) in enumerate(zip(p.G, p.g)):
            lhs = float(np.dot(row, x))
            if lhs > rhs + tol * max(1.0, abs(rhs)):
                problems.append(f"linear {i}: {lhs:.9g} > {rhs:.9g}")
    if p.A_eq is not None:
        for i, (row, rhs) in enumerate(zip(p.A_eq, p.b_eq)):
            if abs(float(np.dot(row, x)) - rhs) > tol * max(1.0, abs(rhs)):
                problems.append(f"equality {i} violated")
    return problems
