"""Convex subproblems and a certified log-barrier interior-point solver.

A subproblem is a linear objective over real variables subject to smooth
convex inequality constraints drawn from a small vocabulary: affine,
convex-quadratic, norm-cone, reciprocal epigraph terms, logarithmic rate
constraints, their perspective form, and square-root gap constraints.  The
solver runs a standard barrier method (Newton inner iterations, backtracking
line search, geometric barrier schedule) with a phase-I fallback, and reports
primal violation and a KKT stationarity residual with the solution.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import nnls

# Solver defaults: feasibility tolerance, stationarity tolerance, barrier
# schedule factor, and the Newton step budget for one solve.
FEAS_TOL = 1e-7
KKT_TOL = 1e-6
BARRIER_FACTOR = 10.0
MAX_NEWTON = 200

_ALPHA = 0.25   # backtracking sufficient-decrease fraction
_BETA = 0.5     # backtracking shrink factor


class Constraint:
    """Smooth convex inequality f(x) <= 0.  Out-of-domain points return +inf."""

    name = ""

    def value(self, x) -> float:
        raise NotImplementedError

    def grad_pairs(self, x):
        """Sparse gradient as (index array, value array)."""
        raise NotImplementedError

    def hess_block(self, x):
        """Sparse curvature as (index array, dense PSD block) or None."""
        return None


class ConstraintBatch:
    """Several structurally identical constraints evaluated together.

    Batches join the barrier's vectorized path; ``as_scalars`` exposes
    equivalent per-constraint views for dual extraction and KKT checks.
    """

    name = ""

    def __len__(self) -> int:
        raise NotImplementedError

    def values(self, x) -> np.ndarray:
        raise NotImplementedError

    def grad_matrix(self, x, n: int) -> np.ndarray:
        """Dense (len(self), n) matrix of constraint gradients."""
        raise NotImplementedError

    def hess_add(self, x, inv_weights, H) -> None:
        """Add sum_i inv_weights[i] * hess_i(x) into H in place."""
        raise NotImplementedError


class _BatchView(Constraint):
    """Single-constraint view into a batch, for duals and KKT reporting."""

    def __init__(self, batch, i, n):
        self.batch, self.i, self.n = batch, i, n
        self.name = f"{batch.name}[{i}]"

    def value(self, x):
        return float(self.batch.values(x)[self.i])

    def grad_pairs(self, x):
        row = self.batch.grad_matrix(x, self.n)[self.i]
        idx = np.flatnonzero(row)
        return idx, row[idx]


def flatten_constraints(cons, n):
    """Expand batches into scalar views, preserving order."""
    out = []
    for con in cons:
        if isinstance(con, ConstraintBatch):
            out.extend(_BatchView(con, i, n) for i in range(len(con)))
        else:
            out.append(con)
    return out


class Affine(Constraint):
    """sum(lin) + const <= 0."""

    def __init__(self, lin: dict, const: float = 0.0, name: str = ""):
        self.idx = np.array(sorted(lin), dtype=int)
        self.coef = np.array([lin[i] for i in sorted(lin)], dtype=float)
        self.const = float(const)
        self.name = name

    def value(self, x):
        return float(self.coef @ x[self.idx] + self.const)

    def grad_pairs(self, x):
        return self.idx, self.coef


class Quadratic(Constraint):
    """y^T P y + lin + const <= 0 with P symmetric PSD over x[idx]."""

    def __init__(self, idx, P, lin: dict | None = None, const: float = 0.0, name: str = ""):
        self.idx = np.asarray(idx, dtype=int)
        self.P = np.asarray(P, dtype=float)
        lin = lin or {}
        self.lin_idx = np.array(sorted(lin), dtype=int)
        self.lin_coef = np.array([lin[i] for i in sorted(lin)], dtype=float)
        self.const = float(const)
        self.name = name
        self._union = np.union1d(self.idx, self.lin_idx)
        self._pos_q = np.searchsorted(self._union, self.idx)
        self._pos_l = np.searchsorted(self._union, self.lin_idx)
        self._P2 = 2.0 * self.P

    def value(self, x):
        y = x[self.idx]
        return float(y @ self.P @ y + self.lin_coef @ x[self.lin_idx] + self.const)

    def grad_pairs(self, x):
        g = np.zeros(self._union.size)
        np.add.at(g, self._pos_q, self._P2 @ x[self.idx])
        np.add.at(g, self._pos_l, self.lin_coef)
        return self._union, g

    def hess_block(self, x):
        return self.idx, self._P2


class Reciprocal(Constraint):
    """a / x_j + lin + const <= 0 with a > 0, domain x_j > 0."""

    def __init__(self, a: float, j: int, lin: dict | None = None, const: float = 0.0, name: str = ""):
        if a <= 0:
            raise ValueError("reciprocal coefficient must be positive")
        self.a, self.j, self.const, self.name = float(a), int(j), float(const), name
        lin = lin or {}
        self.lin_idx = np.array(sorted(lin), dtype=int)
        self.lin_coef = np.array([lin[i] for i in sorted(lin)], dtype=float)
        self._union = np.union1d([self.j], self.lin_idx)
        self._pos_j = int(np.searchsorted(self._union, self.j))
        self._pos_l = np.searchsorted(self._union, self.lin_idx)

    def value(self, x):
        if x[self.j] <= 0:
            return math.inf
        return float(self.a / x[self.j] + self.lin_coef @ x[self.lin_idx] + self.const)

    def grad_pairs(self, x):
        g = np.zeros(self._union.size)
        g[self._pos_j] = -self.a / x[self.j] ** 2
        np.add.at(g, self._pos_l, self.lin_coef)
        return self._union, g

    def hess_block(self, x):
        return np.array([self.j]), np.array([[2.0 * self.a / x[self.j] ** 3]])


class LogRate(Constraint):
    """lin + const + a_recip/x_r - scale * ln(1 + c * x_j) <= 0.

    Covers spectral-efficiency bounds (no reciprocal term) and absolute rate
    floors where the required rate divides by the bandwidth variable.
    """

    def __init__(self, scale: float, j: int, c: float = 1.0, lin: dict | None = None,
                 const: float = 0.0, recip: tuple | None = None, name: str = ""):
        if scale <= 0 or c <= 0:
            raise ValueError("log coefficient and argument scale must be positive")
        self.scale, self.j, self.c = float(scale), int(j), float(c)
        lin = lin or {}
        self.lin_idx = np.array(sorted(lin), dtype=int)
        self.lin_coef = np.array([lin[i] for i in sorted(lin)], dtype=float)
        self.const = float(const)
        self.recip = recip  # (coefficient, variable index) or None
        self.name = name
        extra = [self.j] + ([recip[1]] if recip else [])
        self._union = np.union1d(extra, self.lin_idx)
        self._pos_j = int(np.searchsorted(self._union, self.j))
        self._pos_r = int(np.searchsorted(self._union, recip[1])) if recip else -1
        self._pos_l = np.searchsorted(self._union, self.lin_idx)

    def value(self, x):
        arg = 1.0 + self.c * x[self.j]
        if arg <= 0:
            return math.inf
        v = self.lin_coef @ x[self.lin_idx] + self.const - self.scale * math.log(arg)
        if self.recip:
            a, r = self.recip
            if x[r] <= 0:
                return math.inf
            v += a / x[r]
        return float(v)

    def grad_pairs(self, x):
        g = np.zeros(self._union.size)
        g[self._pos_j] = -self.scale * self.c / (1.0 + self.c * x[self.j])
        if self.recip:
            a, r = self.recip
            g[self._pos_r] += -a / x[r] ** 2
        np.add.at(g, self._pos_l, self.lin_coef)
        return self._union, g

    def hess_block(self, x):
        if self.recip is None:
            h = self.scale * self.c**2 / (1.0 + self.c * x[self.j]) ** 2
            return np.array([self.j]), np.array([[h]])
        a, r = self.recip
        idx = np.array(sorted({self.j, r}))
        block = np.zeros((idx.size, idx.size))
        pj = int(np.searchsorted(idx, self.j))
        pr = int(np.searchsorted(idx, r))
        block[pj, pj] += self.scale * self.c**2 / (1.0 + self.c * x[self.j]) ** 2
        block[pr, pr] += 2.0 * a / x[r] ** 3
        return idx, block


class PerspectiveRate(Constraint):
    """lin + const - scale * g(c_u x_u, c_v x_v) <= 0 with g(u, v) = u ln(1 + v/u).

    g is jointly concave on u > 0, v >= 0, so the constraint is convex.
    """

    def __init__(self, scale: float, j_u: int, c_u: float, j_v: int, c_v: float,
                 lin: dict | None = None, const: float = 0.0, name: str = ""):
        if scale <= 0 or c_u <= 0 or c_v <= 0:
            raise ValueError("perspective coefficients must be positive")
        self.scale, self.j_u, self.c_u, self.j_v, self.c_v = (
            float(scale), int(j_u), float(c_u), int(j_v), float(c_v))
        lin = lin or {}
        self.lin_idx = np.array(sorted(lin), dtype=int)
        self.lin_coef = np.array([lin[i] for i in sorted(lin)], dtype=float)
        self.const = float(const)
        self.name = name
        self._union = np.union1d([self.j_u, self.j_v], self.lin_idx)
        self._pos_u = int(np.searchsorted(self._union, self.j_u))
        self._pos_v = int(np.searchsorted(self._union, self.j_v))
        self._pos_l = np.searchsorted(self._union, self.lin_idx)

    def _uv(self, x):
        return self.c_u * x[self.j_u], self.c_v * x[self.j_v]

    def value(self, x):
        u, v = self._uv(x)
        if u <= 0 or v < 0:
            return math.inf
        g = u * math.log1p(v / u)
        return float(self.lin_coef @ x[self.lin_idx] + self.const - self.scale * g)

    def grad_pairs(self, x):
        u, v = self._uv(x)
        g_u = math.log1p(v / u) - v / (u + v)
        g_v = u / (u + v)
        g = np.zeros(self._union.size)
        g[self._pos_u] = -self.scale * self.c_u * g_u
        g[self._pos_v] += -self.scale * self.c_v * g_v
        np.add.at(g, self._pos_l, self.lin_coef)
        return self._union, g

    def hess_block(self, x):
        u, v = self._uv(x)
        s = (u + v) ** 2
        g_uu, g_uv, g_vv = -(v**2) / (u * s), v / s, -u / s
        if self.j_u == self.j_v:
            raise ValueError("perspective constraint needs distinct variables")
        idx = np.array(sorted([self.j_u, self.j_v]))
        pu = int(np.searchsorted(idx, self.j_u))
        pv = 1 - pu
        block = np.zeros((2, 2))
        block[pu, pu] = -self.scale * self.c_u**2 * g_uu
        block[pv, pv] = -self.scale * self.c_v**2 * g_vv
        block[pu, pv] = block[pv, pu] = -self.scale * self.c_u * self.c_v * g_uv
        return idx, block


class SqrtGap(Constraint):
    """lin + const - a * sqrt(x_j) <= 0 with a > 0, domain x_j > 0."""

    def __init__(self, a: float, j: int, lin: dict | None = None, const: float = 0.0, name: str = ""):
        if a <= 0:
            raise ValueError("sqrt coefficient must be positive")
        self.a, self.j, self.const, self.name = float(a), int(j), float(const), name
        lin = lin or {}
        self.lin_idx = np.array(sorted(lin), dtype=int)
        self.lin_coef = np.array([lin[i] for i in sorted(lin)], dtype=float)
        self._union = np.union1d([self.j], self.lin_idx)
        self._pos_j = int(np.searchsorted(self._union, self.j))
        self._pos_l = np.searchsorted(self._union, self.lin_idx)

    def value(self, x):
        if x[self.j] <= 0:
            return math.inf
        return float(self.lin_coef @ x[self.lin_idx] + self.const - self.a * math.sqrt(x[self.j]))

    def grad_pairs(self, x):
        g = np.zeros(self._union.size)
        g[self._pos_j] = -0.5 * self.a / math.sqrt(x[self.j])
        np.add.at(g, self._pos_l, self.lin_coef)
        return self._union, g

    def hess_block(self, x):
        return np.array([self.j]), np.array([[0.25 * self.a * x[self.j] ** -1.5]])


class NormCone(Constraint):
    """sqrt(eps^2 + ||x[idx]||^2) - x_t <= 0, a smoothed second-order cone."""

    def __init__(self, idx, j_t: int, eps: float = 1e-9, name: str = ""):
        self.idx = np.asarray(idx, dtype=int)
        self.j_t = int(j_t)
        self.eps = float(eps)
        self.name = name
        self._union = np.union1d(self.idx, [self.j_t])
        self._pos_y = np.searchsorted(self._union, self.idx)
        self._pos_t = int(np.searchsorted(self._union, self.j_t))

    def _s(self, x):
        return math.sqrt(self.eps**2 + float(np.sum(x[self.idx] ** 2)))

    def value(self, x):
        return self._s(x) - float(x[self.j_t])

    def grad_pairs(self, x):
        s = self._s(x)
        g = np.zeros(self._union.size)
        np.add.at(g, self._pos_y, x[self.idx] / s)
        g[self._pos_t] += -1.0
        return self._union, g

    def hess_block(self, x):
        s = self._s(x)
        y = x[self.idx]
        block = (np.eye(self.idx.size) - np.outer(y, y) / s**2) / s
        return self.idx, block


@dataclass
class SolveReport:
    """Certified outcome of one subproblem solve."""

    status: str                      # optimal | max_iter | infeasible
    x: np.ndarray
    objective: float
    max_violation: float
    kkt_residual: float
    newton_steps: int
    duals: np.ndarray | None = None
    tau_final: float = 1.0

    @property
    def ok(self) -> bool:
        return self.status == "optimal"


class ConvexSubproblem:
    """A linear objective over named real variables with convex constraints."""

    def __init__(self):
        self.names: list[str] = []
        self.lower: list[float] = []
        self.upper: list[float] = []
        self.start: list[float] = []
        self.constraints: list[Constraint] = []
        self.cost: dict[int, float] = {}
        self._slices: dict[str, np.ndarray] = {}

    @property
    def n(self) -> int:
        return len(self.names)

    def add_var(self, name: str, lb=-math.inf, ub=math.inf, start=None) -> int:
        idx = self.n
        self.names.append(name)
        self.lower.append(float(lb))
        self.upper.append(float(ub))
        if start is None:
            if math.isfinite(lb) and math.isfinite(ub):
                start = 0.5 * (lb + ub)
            elif math.isfinite(lb):
                start = lb + 1.0
            elif math.isfinite(ub):
                start = ub - 1.0
            else:
                start = 0.0
        self.start.append(float(start))
        self._slices[name] = np.array([idx])
        return idx

    def add_vars(self, name: str, count: int, lb=-math.inf, ub=math.inf, start=None) -> np.ndarray:
        idx = np.array([self.add_var(f"{name}[{i}]", lb, ub, start) for i in range(count)])
        self._slices[name] = idx
        return idx

    def add_constraint(self, con: Constraint) -> Constraint:
        self.constraints.append(con)
        return con

    def minimize(self, cost: dict) -> None:
        self.cost = {int(k): float(v) for k, v in cost.items()}

    def cost_vector(self) -> np.ndarray:
        c = np.zeros(self.n)
        for k, v in self.cost.items():
            c[k] = v
        return c

    def bound_constraints(self) -> list[Constraint]:
        out = []
        for i, (lo, hi) in enumerate(zip(self.lower, self.upper)):
            if math.isfinite(lo):
                out.append(Affine({i: -1.0}, lo, name=f"lb:{self.names[i]}"))
            if math.isfinite(hi):
                out.append(Affine({i: 1.0}, -hi, name=f"ub:{self.names[i]}"))
        return out

    def value_of(self, x: np.ndarray, name: str):
        vals = x[self._slices[name]]
        return float(vals[0]) if vals.size == 1 else vals


class _Compiled:
    """Constraint set split into vectorized affine/batch blocks and the rest."""

    def __init__(self, cons, n):
        self.n = n
        self.affine = [con for con in cons if type(con) is Affine]
        self.batches = [con for con in cons if isinstance(con, ConstraintBatch)]
        self.general = [
            con for con in cons
            if type(con) is not Affine and not isinstance(con, ConstraintBatch)
        ]
        self.A = np.zeros((len(self.affine), n))
        self.b = np.zeros(len(self.affine))
        for i, con in enumerate(self.affine):
            self.A[i, con.idx] = con.coef
            self.b[i] = con.const
        self.m = len(self.affine) + len(self.general) + sum(len(b) for b in self.batches)

    def affine_values(self, x):
        return self.A @ x + self.b if self.affine else np.empty(0)

    def potential(self, x, tau, c):
        va = self.affine_values(x)
        if va.size and va.max() >= 0:
            return math.inf
        total = tau * float(c @ x)
        if va.size:
            total -= float(np.log(-va).sum())
        for batch in self.batches:
            vb = batch.values(x)
            if vb.max() >= 0:
                return math.inf
            total -= float(np.log(-vb).sum())
        for con in self.general:
            v = con.value(x)
            if v >= 0:
                return math.inf
            total -= math.log(-v)
        return total

    def assemble(self, x, tau, c):
        grad = tau * c.copy()
        H = np.zeros((self.n, self.n))
        if self.affine:
            va = self.affine_values(x)
            inv = 1.0 / (-va)
            grad += self.A.T @ inv
            H += (self.A.T * (inv * inv)) @ self.A
        for batch in self.batches:
            vb = batch.values(x)
            inv = 1.0 / (-vb)
            G = batch.grad_matrix(x, self.n)
            grad += G.T @ inv
            H += (G.T * (inv * inv)) @ G
            batch.hess_add(x, inv, H)
        if self.general:
            rows = np.zeros((len(self.general), self.n))
            weights = np.empty(len(self.general))
            for i, con in enumerate(self.general):
                f = con.value(x)
                inv = 1.0 / (-f)
                idx, vals = con.grad_pairs(x)
                rows[i, idx] = vals
                grad[idx] += inv * vals
                weights[i] = inv * inv
                hb = con.hess_block(x)
                if hb is not None:
                    bidx, block = hb
                    H[np.ix_(bidx, bidx)] += inv * block
            H += (rows.T * weights) @ rows
        return grad, H


def _barrier_phase(cons, c, x, tau_0, gap_tol, newton_budget, stop_early=None):
    """Run the barrier schedule; returns (x, tau, steps_used, hit_cap).

    Intermediate stages center loosely (path-following only needs approximate
    centering); the last stage centers to full accuracy.
    """
    n = x.size
    compiled = _Compiled(cons, n)
    m = compiled.m
    tau = tau_0
    steps = 0
    ridge = 1e-12
    while True:
        final_stage = m / tau < gap_tol
        center_tol = 1e-10 if final_stage else 1e-4
        for _ in range(50):
            if steps >= newton_budget:
                return x, tau, steps, True
            grad, H = compiled.assemble(x, tau, c)
            H[np.diag_indices_from(H)] += ridge * (1.0 + np.abs(np.diag(H)))
            try:
                step = np.linalg.solve(H, -grad)
            except np.linalg.LinAlgError:
                H[np.diag_indices_from(H)] += 1e-8 * np.trace(H) / n
                step = np.linalg.solve(H, -grad)
            decrement2 = float(-grad @ step)
            if decrement2 / 2.0 <= center_tol:
                break
            base = compiled.potential(x, tau, c)
            t = 1.0
            while (
                compiled.potential(x + t * step, tau, c) > base - _ALPHA * t * decrement2
                and t > 1e-14
            ):
                t *= _BETA
            if t <= 1e-14:
                break
            x = x + t * step
            steps += 1
            if stop_early is not None and stop_early(x):
                return x, tau, steps, False
        if final_stage:
            return x, tau, steps, False
        tau *= BARRIER_FACTOR


def _strictly_feasible(cons, x, margin=0.0):
    return all(con.value(x) < -margin for con in cons)


def phase_one(problem: ConvexSubproblem, cons, x0=None):
    """Find a strictly feasible point by minimizing the worst violation.

    Returns (point, capped): point is None when no strictly feasible point was
    certified; capped reports whether the Newton budget ran out first.
    """
    n = problem.n
    cons = flatten_constraints(cons, n)
    x_start = np.array(problem.start if x0 is None else x0, dtype=float)
    finite_vals = []
    for con in cons:
        v = con.value(x_start)
        if math.isinf(v):
            raise ValueError(
                "phase-I start violates a constraint domain; supply a domain-valid start"
            )
        finite_vals.append(v)
    if all(v < -FEAS_TOL for v in finite_vals):
        return x_start, False
    s0 = max(finite_vals) * 1.05 + 1.0

    class Shifted(Constraint):
        def __init__(self, inner):
            self.inner = inner
            self.name = f"phase1:{inner.name}"

        def value(self, xs):
            return self.inner.value(xs[:-1]) - xs[-1]

        def grad_pairs(self, xs):
            idx, vals = self.inner.grad_pairs(xs[:-1])
            return np.append(idx, n), np.append(vals, -1.0)

        def hess_block(self, xs):
            return self.inner.hess_block(xs[:-1])

    shifted = [Shifted(con) for con in cons]
    c_ext = np.zeros(n + 1)
    c_ext[n] = 1.0
    x_ext = np.append(x_start, s0)
    x_ext, _, _, capped = _barrier_phase(
        shifted, c_ext, x_ext, tau_0=1.0, gap_tol=FEAS_TOL,
        newton_budget=2 * MAX_NEWTON, stop_early=lambda p: p[-1] < -10 * FEAS_TOL,
    )
    if x_ext[-1] >= 0:
        return None, capped
    return x_ext[:-1], False


def solve(problem: ConvexSubproblem, x0=None, gap_tol=1e-8, max_newton=MAX_NEWTON,
          tau0=1.0) -> SolveReport:
    """Minimize the subproblem's linear objective to certified tolerances.

    ``x0``, when given, must be strictly feasible; otherwise a phase-I
    subroutine searches for one.  ``tau0`` sets the initial barrier weight;
    warm starts may continue from a larger value.  Returns status
    ``infeasible`` if no strictly feasible point is found, ``max_iter`` with
    the best iterate if the Newton budget runs out.
    """
    cons = problem.constraints + problem.bound_constraints()
    c = problem.cost_vector()
    n = problem.n
    scalar_cons = flatten_constraints(cons, n)

    capped = False
    if x0 is not None:
        x = np.array(x0, dtype=float)
        if not _strictly_feasible(scalar_cons, x):
            x, capped = phase_one(problem, cons, x0)
            tau0 = 1.0
    else:
        x, capped = phase_one(problem, cons)
        tau0 = 1.0
    if x is None:
        status = "max_iter" if capped else "infeasible"
        return SolveReport(status, np.array(problem.start), math.nan, math.inf,
                           math.inf, 0)

    obj_scale = max(1.0, abs(float(c @ x)))
    x, tau, steps, hit_cap = _barrier_phase(
        cons, c, x, tau_0=tau0, gap_tol=gap_tol * obj_scale, newton_budget=max_newton
    )
    duals = np.array([1.0 / (tau * (-con.value(x))) for con in scalar_cons])
    grad_l = c.copy()
    for lam, con in zip(duals, scalar_cons):
        idx, vals = con.grad_pairs(x)
        grad_l[idx] += lam * vals
    kkt = float(np.max(np.abs(grad_l))) / max(1.0, float(np.max(np.abs(c))))
    violation = max((con.value(x) for con in scalar_cons), default=0.0)
    status = "max_iter" if hit_cap else "optimal"
    return SolveReport(status, x, float(c @ x), max(violation, 0.0), kkt, steps, duals,
                       tau_final=tau)


def check_kkt(problem: ConvexSubproblem, x, active_tol=1e-6) -> dict:
    """Report primal violation, dual feasibility, and complementary slackness at x.

    Dual estimates come from a nonnegative least-squares fit of the active
    constraints' gradients to the negated objective gradient.
    """
    x = np.asarray(x, dtype=float)
    cons = flatten_constraints(problem.constraints, problem.n) + problem.bound_constraints()
    c = problem.cost_vector()
    values = np.array([con.value(x) for con in cons])
    primal = float(np.max(np.maximum(values, 0.0), initial=0.0))

    active = [i for i, v in enumerate(values) if v > -active_tol * max(1.0, abs(v))]
    lam = np.zeros(len(cons))
    if active:
        cols = []
        for i in active:
            idx, vals = cons[i].grad_pairs(x)
            col = np.zeros(problem.n)
            col[idx] = vals
            cols.append(col)
        A = np.column_stack(cols)
        sol, _ = nnls(A, -c)
        lam[active] = sol
    resid = c.copy()
    for i, con in enumerate(cons):
        if lam[i]:
            idx, vals = con.grad_pairs(x)
            resid[idx] += lam[i] * vals
    scale = max(1.0, float(np.max(np.abs(c), initial=0.0)))
    comp = float(np.max(np.abs(lam * values), initial=0.0))
    return {
        "primal_violation": primal,
        "stationarity": float(np.max(np.abs(resid))) / scale,
        "complementarity": comp,
        "duals": lam,
    }


def dump_problem(problem: ConvexSubproblem) -> str:
    """Serialize a subproblem to a self-describing text block (debug aid)."""
    lines = []
    for name, lo, hi, st in zip(problem.names, problem.lower, problem.upper, problem.start):
        lines.append(f"VAR {name} {lo!r} {hi!r} {st!r}")
    lines.append("OBJ " + " ".join(f"{k}:{v!r}" for k, v in sorted(problem.cost.items())))
    for con in problem.constraints:
        kind = type(con).__name__
        fields = {k: v for k, v in vars(con).items() if not k.startswith("_")}
        parts = []
        for key, val in sorted(fields.items()):
            if isinstance(val, np.ndarray):
                parts.append(f"{key}=[{','.join(repr(float(v)) for v in val.ravel())}]@{val.shape}")
            else:
                parts.append(f"{key}={val!r}")
        lines.append(f"CON {kind} " + " ".join(parts))
    return "\n".join(lines) + "\n"
