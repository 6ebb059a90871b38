"""Weighted l1 minimization engines.

Two independent routes are provided: an exact dense simplex on the split
``x = x_plus - x_minus`` linear program, and ADMM-style splitting for the
equality-constrained and ball-constrained (noisy) problems.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import DimensionMismatch, Infeasible, NumericalBreakdown, Unbounded
from .linalg import as_matrix, as_vector, least_squares_solve, row_space_basis

__all__ = [
    "Status",
    "SolveOptions",
    "SolveReport",
    "soft_threshold",
    "linprog_equality",
    "simplex_l1",
    "admm_basis_pursuit",
    "admm_bpdn",
    "weighted_l1",
]

PIVOT_TOL = 1e-12
ENTRY_TOL = 1e-9
PHASE_ONE_TOL = 1e-9
DEGENERATE_RUN = 50
# Residual balancing: adjust the penalty every ADAPT_EVERY iterations and
# freeze it after ADAPT_UNTIL, which rules out penalty limit cycles.
ADAPT_EVERY = 10
ADAPT_UNTIL = 2000
PIVOT_RULES = ("bland", "dantzig")


class Status(str, enum.Enum):
    CONVERGED = "Converged"
    MAX_ITERS = "MaxIters"
    INFEASIBLE = "Infeasible"


@dataclass(frozen=True)
class SolveOptions:
    """Tuning knobs for the splitting solvers.

    ``weights`` of ``None`` means unit weights. ``adaptive`` turns on residual
    balancing of the penalty; it is off by default so that runs are
    reproducible iterate by iterate. ``polish`` re-solves on the detected
    support after convergence of the equality-constrained solver.
    """

    max_iters: int = 20000
    abs_tol: float = 1e-8
    rel_tol: float = 1e-6
    penalty: float = 1.0
    weights: np.ndarray | None = None
    adaptive: bool = False
    polish: bool = True

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValueError("tolerances must be positive")
        if not self.penalty > 0:
            raise ValueError("penalty must be positive")
        if self.weights is not None:
            w = np.asarray(self.weights, dtype=np.float64).reshape(-1)
            if not np.all(np.isfinite(w)) or np.any(w < 0):
                raise ValueError("weights must be finite and nonnegative")
            object.__setattr__(self, "weights", w)

    def with_weights(self, weights) -> "SolveOptions":
        return SolveOptions(
            max_iters=self.max_iters,
            abs_tol=self.abs_tol,
            rel_tol=self.rel_tol,
            penalty=self.penalty,
            weights=weights,
            adaptive=self.adaptive,
            polish=self.polish,
        )


@dataclass(frozen=True)
class SolveReport:
    x: np.ndarray
    objective: float
    primal_residual: float
    dual_residual: float
    iterations: int
    status: Status
    method: str = field(default="", compare=False)

    @property
    def converged(self) -> bool:
        return self.status is Status.CONVERGED


def weighted_l1(x, weights=None) -> float:
    x = np.asarray(x, dtype=np.float64)
    if weights is None:
        return float(np.sum(np.abs(x)))
    return float(np.sum(np.asarray(weights) * np.abs(x)))


def soft_threshold(v, t) -> np.ndarray:
    """Proximal map of the weighted l1 norm: ``sign(v) * max(|v| - t, 0)``."""
    v = np.asarray(v, dtype=np.float64)
    t = np.asarray(t, dtype=np.float64)
    if t.ndim and t.shape != v.shape:
        raise DimensionMismatch(f"threshold shape {t.shape} != vector shape {v.shape}")
    if np.any(t < 0) or not np.all(np.isfinite(t)):
        raise ValueError("thresholds must be finite and nonnegative")
    return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)


def _shrink(v: np.ndarray, t: np.ndarray) -> np.ndarray:
    return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)


def _resolve_weights(weights, n: int) -> np.ndarray:
    if weights is None:
        return np.ones(n)
    w = as_vector(weights)
    if w.shape[0] != n:
        raise DimensionMismatch(f"expected {n} weights, got {w.shape[0]}")
    if np.any(w < 0):
        raise ValueError("weights must be nonnegative")
    return w


# --------------------------------------------------------------------------
# simplex


def _pivot(t: np.ndarray, row: int, col: int) -> None:
    piv = t[row, col]
    if abs(piv) < PIVOT_TOL:
        raise NumericalBreakdown(f"pivot magnitude {abs(piv):.3e} below {PIVOT_TOL}")
    t[row] /= piv
    column = t[:, col].copy()
    column[row] = 0.0
    t -= np.outer(column, t[row])
    t[:, col] = 0.0
    t[row, col] = 1.0


def _run_simplex(t: np.ndarray, basis: list[int], ncols: int, max_pivots: int, rule: str = "bland") -> int:
    """Run primal simplex on tableau ``t`` (last row = reduced costs).

    ``rule="bland"`` enters the lowest-index improving column. ``"dantzig"``
    enters the most negative reduced cost (lowest index on ties) and switches
    permanently to Bland after ``DEGENERATE_RUN`` consecutive degenerate
    pivots, which keeps the anti-cycling guarantee.
    """
    m = t.shape[0] - 1
    pivots = 0
    use_bland = rule == "bland"
    degenerate = 0
    while True:
        reduced = t[m, :ncols]
        candidates = np.flatnonzero(reduced < -ENTRY_TOL)
        if candidates.size == 0:
            return pivots
        if use_bland:
            col = int(candidates[0])
        else:
            col = int(candidates[np.argmin(reduced[candidates])])
        column = t[:m, col]
        eligible = np.flatnonzero(column > ENTRY_TOL)
        if eligible.size == 0:
            raise Unbounded("linear program is unbounded")
        ratios = np.maximum(t[eligible, -1], 0.0) / column[eligible]
        best = ratios.min()
        ties = eligible[ratios <= best + 1e-12 * max(1.0, abs(best))]
        row = int(min(ties, key=lambda i: basis[i]))
        if not use_bland:
            degenerate = degenerate + 1 if best <= 0.0 else 0
            use_bland = degenerate >= DEGENERATE_RUN
        _pivot(t, row, col)
        basis[row] = col
        rhs = t[:m, -1]
        rhs[rhs < 0.0] = 0.0
        pivots += 1
        if pivots > max_pivots:
            raise NumericalBreakdown("simplex exceeded its pivot budget")


def linprog_equality(c, a_eq, b_eq, rule: str = "bland") -> tuple[np.ndarray, float, int]:
    """Minimize ``c @ x`` subject to ``a_eq @ x = b_eq``, ``x >= 0``.

    Dense two-phase tableau simplex. The leaving variable is always chosen by
    the minimum ratio with lowest-index tie breaking; the entering variable
    follows ``rule`` (see :func:`_bland`). Redundant equality rows are detected
    after phase one and dropped. The basic solution is re-solved from the
    original data at the end for accuracy.

    Returns
    -------
    x, objective, pivots
    """
    if rule not in PIVOT_RULES:
        raise ValueError(f"unknown pivot rule {rule!r}")
    c = as_vector(c)
    a = np.asarray(a_eq, dtype=np.float64)
    b = as_vector(b_eq)
    m, n = a.shape
    if c.shape[0] != n or b.shape[0] != m:
        raise DimensionMismatch("inconsistent LP dimensions")
    if m == 0:
        if np.any(c < -ENTRY_TOL):
            raise Unbounded("linear program is unbounded")
        return np.zeros(n), 0.0, 0

    sign = np.where(b < 0, -1.0, 1.0)
    a = a * sign[:, None]
    b = b * sign

    t = np.zeros((m + 1, n + m + 1))
    t[:m, :n] = a
    t[:m, n:n + m] = np.eye(m)
    t[:m, -1] = b
    t[m, :n] = -a.sum(axis=0)
    t[m, -1] = -b.sum()
    basis = list(range(n, n + m))
    budget = 200 * (n + m) + 1000

    pivots = _run_simplex(t, basis, n + m, budget, rule)
    if -t[m, -1] > PHASE_ONE_TOL * (1.0 + float(np.abs(b).sum())):
        raise Infeasible(f"phase one ended with artificial mass {-t[m, -1]:.3e}")

    keep = []
    for i in range(m):
        if basis[i] < n:
            keep.append(i)
            continue
        row = t[i, :n]
        nz = np.flatnonzero(np.abs(row) > ENTRY_TOL)
        if nz.size:
            _pivot(t, i, int(nz[0]))
            basis[i] = int(nz[0])
            pivots += 1
            keep.append(i)
    rows = keep
    t2 = np.zeros((len(rows) + 1, n + 1))
    t2[:-1, :n] = t[rows, :n]
    t2[:-1, -1] = t[rows, -1]
    basis2 = [basis[i] for i in rows]
    cb = c[basis2]
    t2[-1, :n] = c - cb @ t2[:-1, :n]
    t2[-1, -1] = -cb @ t2[:-1, -1]

    pivots += _run_simplex(t2, basis2, n, budget, rule)

    x = np.zeros(n)
    x[basis2] = t2[:-1, -1]
    if basis2:
        bmat = a[rows][:, basis2]
        try:
            refined = np.linalg.solve(bmat, b[rows])
        except np.linalg.LinAlgError:
            refined = None
        if refined is not None and np.all(np.isfinite(refined)) and np.all(refined >= -1e-9):
            x[basis2] = refined
    x = np.maximum(x, 0.0)
    return x, float(c @ x), pivots


def simplex_l1(a, y, weights=None, rule: str = "bland") -> SolveReport:
    """Exact weighted basis pursuit ``min sum w_i |x_i|  s.t.  A x = y``.

    Zero-weight coordinates become free variables with zero cost.

    Raises
    ------
    Infeasible
        If ``y`` is not in the range of ``A``.
    """
    a = as_matrix(a)
    k, n = a.shape
    y = as_vector(y, k)
    w = _resolve_weights(weights, n)
    if not np.any(y):
        return SolveReport(np.zeros(n), 0.0, 0.0, 0.0, 0, Status.CONVERGED, "simplex")
    z, _, pivots = linprog_equality(np.concatenate([w, w]), np.hstack([a, -a]), y, rule)
    x = z[:n] - z[n:]
    resid = float(np.linalg.norm(a @ x - y))
    return SolveReport(x, weighted_l1(x, w), resid, 0.0, pivots, Status.CONVERGED, "simplex")


# --------------------------------------------------------------------------
# splitting


def _polish(a: np.ndarray, y: np.ndarray, w: np.ndarray, x: np.ndarray, z: np.ndarray):
    support = np.flatnonzero(z != 0.0)
    if support.size == 0 or support.size > a.shape[0]:
        return None
    try:
        xs = least_squares_solve(a[:, support], y)
    except Exception:
        return None
    cand = np.zeros_like(x)
    cand[support] = xs
    scale = 1.0 + float(np.linalg.norm(y))
    if np.linalg.norm(a @ cand - y) > 1e-9 * scale:
        return None
    if weighted_l1(cand, w) > weighted_l1(x, w) + 1e-9 * (1.0 + weighted_l1(x, w)):
        return None
    return cand


def _adapt_now(opts: SolveOptions, it: int) -> bool:
    return opts.adaptive and it <= ADAPT_UNTIL and it % ADAPT_EVERY == 0


def admm_basis_pursuit(a, y, opts: SolveOptions | None = None) -> SolveReport:
    """Weighted basis pursuit by two-block splitting.

    The x-update is the orthogonal projection onto ``{x : A x = y}`` using an
    orthonormal basis of the row space, so rank-deficient ``A`` is fine. The
    z-update is soft thresholding with ``w / penalty``.
    """
    opts = opts or SolveOptions()
    a = as_matrix(a)
    k, n = a.shape
    y = as_vector(y, k)
    w = _resolve_weights(opts.weights, n)
    if not np.any(y):
        return SolveReport(np.zeros(n), 0.0, 0.0, 0.0, 0, Status.CONVERGED, "admm-bp")

    rows = row_space_basis(a)
    ynorm = float(np.linalg.norm(y))
    if rows.shape[1] == 0:
        raise Infeasible("A is zero but y is not")
    coef = least_squares_solve(a @ rows, y)
    x_ls = rows @ coef
    if np.linalg.norm(a @ x_ls - y) > 1e-6 * ynorm:
        raise Infeasible("y is not in the range of A")

    def project(v):
        return v - rows @ (rows.T @ v) + x_ls

    rho = opts.penalty
    z = x_ls.copy()
    u = np.zeros(n)
    x = x_ls.copy()
    sqn = np.sqrt(n)
    r_norm = s_norm = np.inf
    status = Status.MAX_ITERS
    it = 0
    for it in range(1, opts.max_iters + 1):
        x = project(z - u)
        z_old = z
        z = _shrink(x + u, w / rho)
        u = u + x - z
        r_norm = float(np.linalg.norm(x - z))
        s_norm = rho * float(np.linalg.norm(z - z_old))
        eps_pri = sqn * opts.abs_tol + opts.rel_tol * max(np.linalg.norm(x), np.linalg.norm(z))
        eps_dual = sqn * opts.abs_tol + opts.rel_tol * rho * np.linalg.norm(u)
        if r_norm <= eps_pri and s_norm <= eps_dual:
            status = Status.CONVERGED
            break
        if _adapt_now(opts, it):
            if r_norm > 10.0 * s_norm:
                rho *= 2.0
                u /= 2.0
            elif s_norm > 10.0 * r_norm:
                rho /= 2.0
                u *= 2.0

    if status is Status.CONVERGED and opts.polish:
        polished = _polish(a, y, w, x, z)
        if polished is not None:
            x = polished
    return SolveReport(x, weighted_l1(x, w), r_norm, s_norm, it, status, "admm-bp")


def _project_ball(v: np.ndarray, centre: np.ndarray, radius: float) -> np.ndarray:
    d = v - centre
    nd = np.linalg.norm(d)
    if nd <= radius:
        return v
    return centre + d * (radius / nd)


def admm_bpdn(a, y, eta: float, opts: SolveOptions | None = None) -> SolveReport:
    """Weighted ``min sum w_i |x_i|  s.t.  ||A x - y||_2 <= eta`` by splitting.

    Consensus form with blocks ``z = x`` and ``w = A x``. The x-update solves
    ``(I + A^T A) x = rhs`` from a QR of ``[I; A]`` computed once; the w-update
    projects onto the ball around ``y``. The returned point is the sparse
    ``z`` iterate; convergence additionally requires that it be
    ``eta``-feasible up to ``1e-6 (1 + ||y||)``.
    """
    opts = opts or SolveOptions()
    if eta < 0:
        raise ValueError("eta must be nonnegative")
    a = as_matrix(a)
    k, n = a.shape
    y = as_vector(y, k)
    wts = _resolve_weights(opts.weights, n)
    ynorm = float(np.linalg.norm(y))
    if eta >= ynorm:
        return SolveReport(np.zeros(n), 0.0, 0.0, 0.0, 0, Status.CONVERGED, "admm-bpdn")
    if eta == 0.0:
        return admm_basis_pursuit(a, y, opts)

    _, r_fac = scipy.linalg.qr(np.vstack([np.eye(n), a]), mode="economic")

    def solve_normal(rhs):
        tmp = scipy.linalg.solve_triangular(r_fac, rhs, trans="T", lower=False, check_finite=False)
        return scipy.linalg.solve_triangular(r_fac, tmp, lower=False, check_finite=False)

    rho = opts.penalty
    x = np.zeros(n)
    z = np.zeros(n)
    w = _project_ball(np.zeros(k), y, eta)
    uz = np.zeros(n)
    uw = np.zeros(k)
    sq = np.sqrt(n + k)
    slack = 1e-6 * (1.0 + ynorm)
    r_norm = s_norm = np.inf
    status = Status.MAX_ITERS
    it = 0
    for it in range(1, opts.max_iters + 1):
        x = solve_normal(z - uz + a.T @ (w - uw))
        ax = a @ x
        z_old, w_old = z, w
        z = _shrink(x + uz, wts / rho)
        w = _project_ball(ax + uw, y, eta)
        uz = uz + x - z
        uw = uw + ax - w
        r_norm = float(np.sqrt(np.sum((x - z) ** 2) + np.sum((ax - w) ** 2)))
        s_norm = rho * float(np.linalg.norm((z - z_old) + a.T @ (w - w_old)))
        eps_pri = sq * opts.abs_tol + opts.rel_tol * max(
            np.sqrt(np.sum(x**2) + np.sum(ax**2)), np.sqrt(np.sum(z**2) + np.sum(w**2))
        )
        eps_dual = np.sqrt(n) * opts.abs_tol + opts.rel_tol * rho * np.linalg.norm(uz + a.T @ uw)
        if r_norm <= eps_pri and s_norm <= eps_dual:
            if np.linalg.norm(a @ z - y) <= eta + slack:
                status = Status.CONVERGED
                break
        if _adapt_now(opts, it):
            if r_norm > 10.0 * s_norm:
                rho *= 2.0
                uz /= 2.0
                uw /= 2.0
            elif s_norm > 10.0 * r_norm:
                rho /= 2.0
                uz *= 2.0
                uw *= 2.0
    return SolveReport(z, weighted_l1(z, wts), r_norm, s_norm, it, status, "admm-bpdn")
