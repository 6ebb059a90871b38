"""Partially sparse recovery: only the leading block of ``x`` is sparse.

``A = (A1, A2)`` where ``A2`` holds the last ``r`` columns (the dense block).
Projecting with ``P``, the orthogonal projector onto ``range(A2)``'s
complement, eliminates ``x2`` and leaves a classical sparse recovery problem
in ``x1``; ``x2`` is then recovered by least squares.
"""
from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch
from .linalg import Projector, as_matrix, as_vector, build_projector
from .solvers import SolveOptions, SolveReport, Status, admm_basis_pursuit, admm_bpdn, simplex_l1

__all__ = [
    "PartitionedMatrix",
    "PartiallySparseSignal",
    "PartialSolution",
    "Route",
    "split_matrix",
    "reduce_problem",
    "recover_projected",
    "recover_direct",
]


class Route(str, enum.Enum):
    PROJECTED = "Projected"
    DIRECT = "Direct"


@dataclass(frozen=True, eq=False)
class PartitionedMatrix:
    """Measurement matrix split as ``(A1, A2)`` with ``r`` dense columns.

    Build with :func:`split_matrix`, which validates the rank of ``A2`` and
    computes the projector eagerly; instances are immutable afterwards.
    """

    a: np.ndarray
    r: int
    projector: Projector
    pa1: np.ndarray

    @property
    def k(self) -> int:
        return self.a.shape[0]

    @property
    def n(self) -> int:
        return self.a.shape[1]

    @property
    def a1(self) -> np.ndarray:
        return self.a[:, : self.n - self.r]

    @property
    def a2(self) -> np.ndarray:
        return self.a[:, self.n - self.r:]

    @property
    def p(self) -> np.ndarray:
        return self.projector.p

    def join(self, x1, x2) -> np.ndarray:
        return np.concatenate([np.asarray(x1, dtype=float), np.asarray(x2, dtype=float)])

    def split(self, x) -> tuple[np.ndarray, np.ndarray]:
        x = as_vector(x, self.n)
        return x[: self.n - self.r], x[self.n - self.r:]


@dataclass(frozen=True)
class PartiallySparseSignal:
    x1: np.ndarray
    x2: np.ndarray
    declared_sparsity: int

    @property
    def x(self) -> np.ndarray:
        return np.concatenate([self.x1, self.x2])

    @property
    def is_exactly_sparse(self) -> bool:
        return int(np.count_nonzero(self.x1)) <= self.declared_sparsity


@dataclass(frozen=True)
class PartialSolution:
    x1: np.ndarray
    x2: np.ndarray
    x1_report: SolveReport
    x2_residual: float
    route: Route

    @property
    def x(self) -> np.ndarray:
        return np.concatenate([self.x1, self.x2])


def split_matrix(a, r: int) -> PartitionedMatrix:
    """Split ``a`` into ``(A1, A2)`` with the last ``r`` columns dense.

    Raises
    ------
    RankDeficient
        If the dense block does not have full column rank.
    """
    a = as_matrix(a)
    k, n = a.shape
    if not 0 <= r <= min(k, n):
        raise DimensionMismatch(f"split size r={r} must lie in [0, {min(k, n)}]")
    a.setflags(write=False)
    proj = build_projector(a[:, n - r:], k=k)
    pa1 = proj.p @ a[:, : n - r]
    pa1.setflags(write=False)
    return PartitionedMatrix(a=a, r=r, projector=proj, pa1=pa1)


def reduce_problem(part: PartitionedMatrix, y) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(P A1, P y)``, the classical problem left for ``x1``."""
    y = as_vector(y, part.k)
    return part.pa1, part.p @ y


def _back_solve(part: PartitionedMatrix, y: np.ndarray, x1: np.ndarray) -> tuple[np.ndarray, float]:
    rhs = y - part.a1 @ x1
    if part.r == 0:
        return np.zeros(0), float(np.linalg.norm(rhs))
    x2 = part.projector.a2_pseudo.solve(rhs)
    return x2, float(np.linalg.norm(part.a2 @ x2 - rhs))


def recover_projected(
    part: PartitionedMatrix,
    y,
    eta: float = 0.0,
    opts: SolveOptions | None = None,
    method: str | None = None,
    pivot_rule: str = "bland",
) -> PartialSolution:
    """Recover ``(x1, x2)`` through the projected problem.

    ``x1`` minimizes ``||x1||_1`` subject to ``||P A1 x1 - P y|| <= eta``
    (equality when ``eta == 0``); ``x2`` then solves ``A2 x2 = y - A1 x1`` in
    the least-squares sense.

    ``method`` selects ``"simplex"`` or ``"splitting"`` for ``eta == 0``
    (default simplex, entering rule ``pivot_rule``); ``eta > 0`` always uses
    splitting.
    """
    if eta < 0:
        raise ValueError("eta must be nonnegative")
    y = as_vector(y, part.k)
    opts = opts or SolveOptions()
    pa1, py = reduce_problem(part, y)
    n1 = part.n - part.r

    if part.r == part.k:
        warnings.warn("r == k: the projector is zero and x1 cannot be identified; returning x1 = 0")
        x1 = np.zeros(n1)
        report = SolveReport(x1, 0.0, 0.0, 0.0, 0, Status.CONVERGED, "degenerate")
    elif n1 == 0:
        x1 = np.zeros(0)
        report = SolveReport(x1, 0.0, float(np.linalg.norm(py)), 0.0, 0, Status.CONVERGED, "degenerate")
    elif eta == 0.0:
        method = method or "simplex"
        if method == "simplex":
            report = simplex_l1(pa1, py, rule=pivot_rule)
        elif method == "splitting":
            report = admm_basis_pursuit(pa1, py, opts.with_weights(None))
        else:
            raise ValueError(f"unknown method {method!r}")
        x1 = report.x
    else:
        report = admm_bpdn(pa1, py, eta, opts.with_weights(None))
        x1 = report.x

    x2, resid = _back_solve(part, y, x1)
    return PartialSolution(x1=x1, x2=x2, x1_report=report, x2_residual=resid, route=Route.PROJECTED)


def recover_direct(
    part: PartitionedMatrix,
    y,
    eta: float = 0.0,
    opts: SolveOptions | None = None,
    pivot_rule: str = "bland",
) -> PartialSolution:
    """Solve the unreduced problem: weight 1 on ``x1`` and 0 on ``x2``.

    Exact simplex (with ``x2`` as free variables) when ``eta == 0``, weighted
    ball-constrained splitting otherwise.
    """
    if eta < 0:
        raise ValueError("eta must be nonnegative")
    y = as_vector(y, part.k)
    opts = opts or SolveOptions()
    n1 = part.n - part.r
    weights = np.concatenate([np.ones(n1), np.zeros(part.r)])
    if eta == 0.0:
        report = simplex_l1(part.a, y, weights, rule=pivot_rule)
    else:
        report = admm_bpdn(part.a, y, eta, opts.with_weights(weights))
    x1, x2 = part.split(report.x)
    resid = float(np.linalg.norm(part.a2 @ x2 - (y - part.a1 @ x1)))
    return PartialSolution(x1=x1, x2=x2, x1_report=report, x2_residual=resid, route=Route.DIRECT)
