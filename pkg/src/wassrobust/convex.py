"""Interior-point solver for smooth convex programs over boxes.

Programs have the form

    maximize   c . x
    subject to g_j(x) <= 0        (smooth convex rows, grouped in blocks)
               lower <= x <= upper (entries may be infinite)

The solver follows the log-barrier central path, driven in primal-dual
form: Newton steps on the perturbed optimality system with one
multiplier per constraint row and per finite box bound, a
fraction-to-boundary rule, and a backtracking line search on the
residual norm.  Working on the optimality residuals keeps every
quantity at its natural scale, which is what lets the solver certify
tolerances near 1e-8 in double precision; a pure primal barrier loses
those digits in its merit function once the barrier weight is large.
The barrier weight decreases by a fixed factor (default 10) per step.

Constraint blocks supply values, Jacobians, and weighted Hessians.  If
any block lacks a Hessian, the solver falls back to a value-based
barrier with BFGS centering, which certifies looser tolerances only.

Everything here is deterministic: identical inputs produce identical
reports, bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .losses import sigmoid, softplus

__all__ = [
    "LinearConstraints",
    "SoftplusConstraints",
    "SoftplusSumConstraint",
    "SmoothConstraint",
    "ConvexProgram",
    "SolveReport",
    "solve",
    "OPTIMAL",
    "INFEASIBLE",
    "ITERATION_LIMIT",
]

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
ITERATION_LIMIT = "iteration_limit"


class LinearConstraints:
    """Rows ``coeffs @ x + offsets <= 0``."""

    has_hessian = True

    def __init__(self, coeffs, offsets):
        self.coeffs = np.atleast_2d(np.asarray(coeffs, dtype=float))
        self.offsets = np.atleast_1d(np.asarray(offsets, dtype=float))
        if self.coeffs.shape[0] != self.offsets.size:
            raise ValueError("row count mismatch between coeffs and offsets")

    @property
    def rows(self):
        return self.offsets.size

    @property
    def dim(self):
        return self.coeffs.shape[1]

    def values(self, x):
        return self.coeffs @ x + self.offsets

    def jacobian(self, x):
        return self.coeffs

    def curvature(self, x, weights):
        return None


class SoftplusConstraints:
    """Rows ``softplus(curve @ x + curve_offset) + linear @ x + offset <= 0``.

    Each row couples one softplus of an affine score with an extra
    affine term; this is exactly the shape of a loss-based cut.
    """

    has_hessian = True

    def __init__(self, curves, curve_offsets, linear, offsets):
        self.curves = np.atleast_2d(np.asarray(curves, dtype=float))
        self.curve_offsets = np.atleast_1d(np.asarray(curve_offsets, dtype=float))
        self.linear = np.atleast_2d(np.asarray(linear, dtype=float))
        self.offsets = np.atleast_1d(np.asarray(offsets, dtype=float))
        k = self.curves.shape[0]
        if not (self.curve_offsets.size == k and self.linear.shape[0] == k and self.offsets.size == k):
            raise ValueError("row count mismatch between softplus rows")
        if self.curves.shape[1] != self.linear.shape[1]:
            raise ValueError("dimension mismatch between curve and linear parts")

    @property
    def rows(self):
        return self.offsets.size

    @property
    def dim(self):
        return self.curves.shape[1]

    def _scores(self, x):
        return self.curves @ x + self.curve_offsets

    def values(self, x):
        return softplus(self._scores(x)) + self.linear @ x + self.offsets

    def jacobian(self, x):
        sig = sigmoid(self._scores(x))
        return sig[:, None] * self.curves + self.linear

    def curvature(self, x, weights):
        sig = sigmoid(self._scores(x))
        w = weights * sig * (1.0 - sig)
        return (self.curves * w[:, None]).T @ self.curves


class SoftplusSumConstraint:
    """One row ``sum_k w_k softplus(curves_k @ x + b_k) + linear @ x + offset <= 0``."""

    rows = 1
    has_hessian = True

    def __init__(self, weights, curves, curve_offsets, linear, offset):
        self.weights = np.atleast_1d(np.asarray(weights, dtype=float))
        self.curves = np.atleast_2d(np.asarray(curves, dtype=float))
        self.curve_offsets = np.atleast_1d(np.asarray(curve_offsets, dtype=float))
        self.linear = np.asarray(linear, dtype=float)
        self.offset = float(offset)
        k = self.curves.shape[0]
        if not (self.weights.size == k and self.curve_offsets.size == k):
            raise ValueError("row count mismatch between softplus terms")
        if self.curves.shape[1] != self.linear.size:
            raise ValueError("dimension mismatch between curve and linear parts")

    @property
    def dim(self):
        return self.linear.size

    def _scores(self, x):
        return self.curves @ x + self.curve_offsets

    def values(self, x):
        total = self.weights @ softplus(self._scores(x)) + self.linear @ x + self.offset
        return np.array([total])

    def jacobian(self, x):
        sig = sigmoid(self._scores(x))
        row = (self.weights * sig) @ self.curves + self.linear
        return row[None, :]

    def curvature(self, x, weights):
        sig = sigmoid(self._scores(x))
        w = weights[0] * self.weights * sig * (1.0 - sig)
        return (self.curves * w[:, None]).T @ self.curves


class SmoothConstraint:
    """One general convex row from callables; the Hessian is optional."""

    rows = 1

    def __init__(self, fun, grad, hess=None):
        self.fun = fun
        self.grad = grad
        self.hess = hess

    @property
    def has_hessian(self):
        return self.hess is not None

    def values(self, x):
        return np.array([float(self.fun(x))])

    def jacobian(self, x):
        return np.asarray(self.grad(x), dtype=float)[None, :]

    def curvature(self, x, weights):
        if self.hess is None:
            return None
        return weights[0] * np.asarray(self.hess(x), dtype=float)


@dataclass
class ConvexProgram:
    """A smooth convex program over a box; the objective is maximized."""

    objective: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    blocks: list

    def __post_init__(self):
        self.objective = np.asarray(self.objective, dtype=float)
        self.lower = np.asarray(self.lower, dtype=float)
        self.upper = np.asarray(self.upper, dtype=float)
        d = self.objective.size
        if self.lower.shape != (d,) or self.upper.shape != (d,):
            raise ValueError("box bounds must match the objective dimension")
        if np.any(self.lower >= self.upper):
            raise ValueError("box must have positive width in every dimension")
        for block in self.blocks:
            if getattr(block, "dim", d) != d:
                raise ValueError("constraint block dimension mismatch")

    @property
    def dim(self):
        return self.objective.size

    @property
    def constraint_rows(self):
        return sum(block.rows for block in self.blocks)

    @property
    def has_hessians(self):
        return all(block.has_hessian for block in self.blocks)

    def constraint_values(self, x):
        if not self.blocks:
            return np.empty(0)
        return np.concatenate([block.values(x) for block in self.blocks])

    def constraint_jacobian(self, x):
        if not self.blocks:
            return np.empty((0, self.dim))
        return np.vstack([block.jacobian(x) for block in self.blocks])

    def weighted_curvature(self, x, weights):
        """sum_j weights_j * hessian(g_j), accumulated across blocks."""
        total = None
        ofs = 0
        for block in self.blocks:
            part = block.curvature(x, weights[ofs : ofs + block.rows])
            ofs += block.rows
            if part is not None:
                total = part if total is None else total + part
        return total


@dataclass
class SolveReport:
    solution: np.ndarray | None
    objective: float
    status: str
    kkt_residual: float
    iterations: int


_RIDGE_TRIES = 8


def _finite_start(lower, upper):
    x = np.zeros(lower.size)
    for j in range(lower.size):
        lo, hi = lower[j], upper[j]
        if np.isfinite(lo) and np.isfinite(hi):
            x[j] = 0.5 * (lo + hi)
        elif np.isfinite(lo):
            x[j] = lo + 1.0
        elif np.isfinite(hi):
            x[j] = hi - 1.0
    return x


def _count_log_terms(program):
    return (
        program.constraint_rows
        + int(np.sum(np.isfinite(program.lower)))
        + int(np.sum(np.isfinite(program.upper)))
    )


def _solve_spd(hess, rhs):
    """Solve hess @ d = rhs for a (near) positive definite hess."""
    scale = max(1.0, float(np.trace(hess)) / hess.shape[0])
    ridge = 0.0
    for attempt in range(_RIDGE_TRIES):
        try:
            H = hess if ridge == 0.0 else hess + ridge * np.eye(hess.shape[0])
            factor = scipy.linalg.cho_factor(H, check_finite=False)
            return scipy.linalg.cho_solve(factor, rhs, check_finite=False)
        except scipy.linalg.LinAlgError:
            ridge = scale * 10.0 ** (attempt - 12)
    return rhs / scale


def _strictly_feasible(program, x):
    if x is None or np.shape(x) != (program.dim,) or not np.all(np.isfinite(x)):
        return False
    x = np.asarray(x, dtype=float)
    if np.any(x <= program.lower) or np.any(x >= program.upper):
        return False
    return bool(np.all(program.constraint_values(x) < 0.0))


def _pd_solve(program, tol, x, max_iters, shrink=0.1, stop_early=None):
    """Primal-dual interior steps from a strictly feasible x.

    Returns (x, status, kkt_residual, iterations).  Terminates when both
    the complementarity sum and the dual residual norm drop below half
    the tolerance; their sum is the reported optimality measure.
    """
    c = program.objective
    lo, hi = program.lower, program.upper
    lo_idx = np.flatnonzero(np.isfinite(lo))
    hi_idx = np.flatnonzero(np.isfinite(hi))
    dim = program.dim
    n_rows = program.constraint_rows
    count = n_rows + lo_idx.size + hi_idx.size

    g = program.constraint_values(x)
    s_row = -g
    s_lo = x[lo_idx] - lo[lo_idx]
    s_hi = hi[hi_idx] - x[hi_idx]
    lam_row = 1.0 / s_row
    lam_lo = 1.0 / s_lo
    lam_hi = 1.0 / s_hi

    def dual_residual(jac, lam_row, lam_lo, lam_hi):
        r = -c.copy()
        if n_rows:
            r += jac.T @ lam_row
        np.subtract.at(r, lo_idx, lam_lo)
        np.add.at(r, hi_idx, lam_hi)
        return r

    def residual_norm(xx, lam_row, lam_lo, lam_hi, mu):
        gg = program.constraint_values(xx)
        jac = program.constraint_jacobian(xx)
        r_dual = dual_residual(jac, lam_row, lam_lo, lam_hi)
        r_cent = np.concatenate([
            lam_row * (-gg) - mu,
            lam_lo * (xx[lo_idx] - lo[lo_idx]) - mu,
            lam_hi * (hi[hi_idx] - xx[hi_idx]) - mu,
        ])
        return float(np.sqrt(np.sum(r_dual**2) + np.sum(r_cent**2)))

    for it in range(1, max_iters + 1):
        jac = program.constraint_jacobian(x)
        r_dual = dual_residual(jac, lam_row, lam_lo, lam_hi)
        gap = float(s_row @ lam_row + s_lo @ lam_lo + s_hi @ lam_hi)
        dual_norm = float(np.linalg.norm(r_dual))
        if gap <= 0.5 * tol and dual_norm <= 0.5 * tol:
            return x, OPTIMAL, gap + dual_norm, it - 1
        mu = max(shrink * gap / count, 1e-300)

        hess = np.zeros((dim, dim))
        if n_rows:
            curv = program.weighted_curvature(x, lam_row)
            if curv is not None:
                hess += curv
            hess += (jac * (lam_row / s_row)[:, None]).T @ jac
        diag = np.zeros(dim)
        np.add.at(diag, lo_idx, lam_lo / s_lo)
        np.add.at(diag, hi_idx, lam_hi / s_hi)
        hess[np.diag_indices(dim)] += diag

        rhs = c.copy()
        if n_rows:
            rhs -= jac.T @ (mu / s_row)
        np.add.at(rhs, lo_idx, mu / s_lo)
        np.subtract.at(rhs, hi_idx, mu / s_hi)
        dx = _solve_spd(hess, rhs)

        dlam_row = (mu - lam_row * s_row) / s_row + (lam_row / s_row) * (jac @ dx) \
            if n_rows else np.empty(0)
        dlam_lo = (mu - lam_lo * s_lo) / s_lo - (lam_lo / s_lo) * dx[lo_idx]
        dlam_hi = (mu - lam_hi * s_hi) / s_hi + (lam_hi / s_hi) * dx[hi_idx]

        # fraction to boundary: multipliers stay positive, box slacks too
        alpha = 1.0
        for vec, dvec in ((lam_row, dlam_row), (lam_lo, dlam_lo), (lam_hi, dlam_hi),
                          (s_lo, dx[lo_idx]), (s_hi, -dx[hi_idx])):
            neg = dvec < 0
            if np.any(neg):
                alpha = min(alpha, 0.99 * float(np.min(-vec[neg] / dvec[neg])))
        # nonlinear rows: back off until strictly feasible
        while alpha > 1e-14:
            if not n_rows or np.all(program.constraint_values(x + alpha * dx) < 0.0):
                break
            alpha *= 0.5
        base = residual_norm(x, lam_row, lam_lo, lam_hi, mu)
        accepted = False
        while alpha > 1e-14:
            x_new = x + alpha * dx
            trial = residual_norm(x_new, lam_row + alpha * dlam_row,
                                  lam_lo + alpha * dlam_lo,
                                  lam_hi + alpha * dlam_hi, mu)
            if trial <= (1.0 - 0.01 * alpha) * base:
                accepted = True
                break
            alpha *= 0.5
        if not accepted:
            # stuck at numerical precision; report what we have
            return x, (OPTIMAL if gap + dual_norm <= tol else ITERATION_LIMIT), \
                gap + dual_norm, it
        x = x + alpha * dx
        if n_rows:
            lam_row = lam_row + alpha * dlam_row
        lam_lo = lam_lo + alpha * dlam_lo
        lam_hi = lam_hi + alpha * dlam_hi
        g = program.constraint_values(x)
        s_row = -g
        s_lo = x[lo_idx] - lo[lo_idx]
        s_hi = hi[hi_idx] - x[hi_idx]
        if stop_early is not None and stop_early(x):
            return x, OPTIMAL, gap + dual_norm, it
    g = program.constraint_values(x)
    gap = float(-g @ lam_row + (x[lo_idx] - lo[lo_idx]) @ lam_lo
                + (hi[hi_idx] - x[hi_idx]) @ lam_hi)
    return x, ITERATION_LIMIT, gap, max_iters


# ---------------------------------------------------------------------------
# value-based barrier with BFGS centering: fallback for blocks without
# Hessians.  Cannot certify deep tolerances; fine for loose ones.

def _barrier_value(program, x, t):
    val = -t * float(program.objective @ x)
    lo_gap = x - program.lower
    hi_gap = program.upper - x
    finite_lo = np.isfinite(program.lower)
    finite_hi = np.isfinite(program.upper)
    if np.any(lo_gap[finite_lo] <= 0.0) or np.any(hi_gap[finite_hi] <= 0.0):
        return np.inf
    for block in program.blocks:
        g = block.values(x)
        if np.any(g >= 0.0):
            return np.inf
        val -= float(np.sum(np.log(-g)))
    val -= float(np.sum(np.log(lo_gap[finite_lo])))
    val -= float(np.sum(np.log(hi_gap[finite_hi])))
    return val


def _barrier_gradient(program, x, t):
    grad = -t * program.objective.copy()
    for block in program.blocks:
        g = block.values(x)
        J = block.jacobian(x)
        grad += J.T @ (-1.0 / g)
    finite_lo = np.isfinite(program.lower)
    finite_hi = np.isfinite(program.upper)
    grad[finite_lo] -= 1.0 / (x[finite_lo] - program.lower[finite_lo])
    grad[finite_hi] += 1.0 / (program.upper[finite_hi] - x[finite_hi])
    return grad


def _line_search(program, x, dx, t, val, slope):
    step = 1.0
    for _ in range(100):
        cand = _barrier_value(program, x + step * dx, t)
        if np.isfinite(cand) and cand <= val + 0.25 * step * slope:
            return step
        step *= 0.5
    return 0.0


def _center_bfgs(program, x, t, max_iters, stop_early=None):
    dim = program.dim
    h_inv = np.eye(dim)
    val = _barrier_value(program, x, t)
    grad = _barrier_gradient(program, x, t)
    for it in range(1, max_iters + 1):
        dx = -h_inv @ grad
        slope = float(grad @ dx)
        if slope >= 0.0:
            h_inv = np.eye(dim)
            dx = -grad
            slope = float(grad @ dx)
        decrement = -slope
        if decrement <= 2e-9:
            return x, it - 1, True, max(decrement, 0.0)
        step = _line_search(program, x, dx, t, val, slope)
        if step == 0.0:
            return x, it, True, max(decrement, 0.0)
        x_new = x + step * dx
        grad_new = _barrier_gradient(program, x_new, t)
        s = x_new - x
        y = grad_new - grad
        sy = float(s @ y)
        if sy > 1e-12 * float(np.linalg.norm(s)) * float(np.linalg.norm(y)):
            rho = 1.0 / sy
            v = np.eye(dim) - rho * np.outer(s, y)
            h_inv = v @ h_inv @ v.T + rho * np.outer(s, s)
        x, grad = x_new, grad_new
        val = _barrier_value(program, x, t)
        if stop_early is not None and stop_early(x):
            return x, it, True, max(decrement, 0.0)
    return x, max_iters, False, 0.0


def _bfgs_barrier_solve(program, tol, x, max_iters, factor, stop_early=None):
    n_log = _count_log_terms(program)
    t = 1.0
    total = 0
    while True:
        x, iters, converged, decrement = _center_bfgs(
            program, x, t, 8 * max_iters, stop_early=stop_early)
        total += iters
        if stop_early is not None and stop_early(x):
            return x, OPTIMAL, n_log / t, total
        if not converged:
            return x, ITERATION_LIMIT, n_log / t + decrement, total
        gap = n_log / t
        if gap <= 0.5 * tol:
            return x, OPTIMAL, gap + decrement, total
        t *= factor


# ---------------------------------------------------------------------------


class _Phase1Block:
    """Wraps a block so each row becomes g_j(x) - slack <= 0."""

    def __init__(self, inner):
        self.inner = inner
        self.rows = inner.rows
        self.has_hessian = inner.has_hessian

    def values(self, y):
        return self.inner.values(y[:-1]) - y[-1]

    def jacobian(self, y):
        J = self.inner.jacobian(y[:-1])
        return np.hstack([J, -np.ones((self.rows, 1))])

    def curvature(self, y, weights):
        curv = self.inner.curvature(y[:-1], weights)
        if curv is None:
            return None
        out = np.zeros((curv.shape[0] + 1, curv.shape[1] + 1))
        out[:-1, :-1] = curv
        return out


def _phase1(program, max_iters, factor):
    """Find a strictly feasible point, or None when there is none."""
    if not program.blocks:
        return _finite_start(program.lower, program.upper)
    aug = ConvexProgram(
        objective=np.concatenate([np.zeros(program.dim), [-1.0]]),
        lower=np.concatenate([program.lower, [-np.inf]]),
        upper=np.concatenate([program.upper, [np.inf]]),
        blocks=[_Phase1Block(b) for b in program.blocks],
    )
    x_c = _finite_start(program.lower, program.upper)
    slack0 = float(np.max(program.constraint_values(x_c))) + 1.0
    y = np.concatenate([x_c, [slack0]])
    stop = lambda z: z[-1] < -1e-6
    if stop(y):
        return x_c
    if aug.has_hessians:
        y, status, _, _ = _pd_solve(aug, 1e-9, y, 4 * max_iters, stop_early=stop)
    else:
        y, status, _, _ = _bfgs_barrier_solve(aug, 1e-9, y, max_iters, factor,
                                              stop_early=stop)
    if stop(y):
        return y[:-1]
    return None


def solve(program, tol=1e-8, x0=None, max_newton=200, barrier_factor=10.0):
    """Solve the program to within ``tol`` of its optimal value.

    ``x0``, when given and strictly feasible, skips the feasibility
    phase.  The report's ``kkt_residual`` is the certified optimality
    measure: complementarity sum plus dual residual norm.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if barrier_factor <= 1:
        raise ValueError("barrier_factor must exceed 1")
    n_log = _count_log_terms(program)
    if n_log == 0:
        if np.any(program.objective != 0.0):
            raise ValueError("program has no constraints or finite bounds: unbounded")
        x = _finite_start(program.lower, program.upper)
        return SolveReport(x, 0.0, OPTIMAL, 0.0, 0)

    x = np.asarray(x0, dtype=float) if x0 is not None else None
    if x is not None and not _strictly_feasible(program, x):
        x = None
    if x is None:
        x = _phase1(program, max_newton, barrier_factor)
        if x is None:
            return SolveReport(None, np.nan, INFEASIBLE, np.nan, 0)

    if program.has_hessians:
        x, status, kkt, iters = _pd_solve(program, tol, x, max_newton,
                                          shrink=1.0 / barrier_factor)
    else:
        x, status, kkt, iters = _bfgs_barrier_solve(program, tol, x,
                                                    max_newton, barrier_factor)
    return SolveReport(x, float(program.objective @ x), status, kkt, iters)
