"""Dense real linear algebra kernel.

Matrices are plain 2-D ``float64`` numpy arrays. Every public entry point
validates finiteness so that downstream certificates never see NaN.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DimensionMismatch, NonFiniteInput, NotSymmetric, RankDeficient

__all__ = [
    "as_matrix",
    "as_vector",
    "QrFactorization",
    "Projector",
    "qr_factor",
    "default_rank_tolerance",
    "least_squares_solve",
    "build_projector",
    "null_space_basis",
    "sym_eig",
    "sym_eig_batch",
    "spectral_norm",
]

JACOBI_REL_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100


def as_matrix(m, *, allow_empty: bool = False) -> np.ndarray:
    """Return ``m`` as a finite 2-D float64 array."""
    a = np.array(m, dtype=np.float64, copy=True)
    if a.ndim == 1:
        a = a.reshape(1, -1)
    if a.ndim != 2:
        raise DimensionMismatch(f"expected a 2-D matrix, got shape {a.shape}")
    if not allow_empty and a.size == 0:
        raise DimensionMismatch("matrix must be nonempty")
    if not np.all(np.isfinite(a)):
        raise NonFiniteInput("matrix contains NaN or Inf")
    return a


def as_vector(v, length: int | None = None) -> np.ndarray:
    x = np.array(v, dtype=np.float64, copy=True).reshape(-1)
    if not np.all(np.isfinite(x)):
        raise NonFiniteInput("vector contains NaN or Inf")
    if length is not None and x.shape[0] != length:
        raise DimensionMismatch(f"expected vector of length {length}, got {x.shape[0]}")
    return x


def default_rank_tolerance(shape: tuple[int, int], diag: np.ndarray) -> float:
    scale = float(np.max(np.abs(diag))) if diag.size else 0.0
    return 1e-10 * max(shape) * scale


@dataclass(frozen=True)
class QrFactorization:
    """Economic QR factors ``m = q @ r`` of a ``rows x cols`` matrix."""

    q: np.ndarray
    r: np.ndarray
    rank: int
    rank_tolerance: float

    @property
    def full_column_rank(self) -> bool:
        return self.rank == self.r.shape[1]

    def solve(self, b) -> np.ndarray:
        """Least-squares solution ``argmin ||m x - b||``; needs full column rank."""
        if not self.full_column_rank:
            raise RankDeficient(f"rank {self.rank} < {self.r.shape[1]} columns")
        b = as_vector(b, self.q.shape[0])
        if self.r.shape[1] == 0:
            return np.zeros(0)
        return scipy.linalg.solve_triangular(self.r, self.q.T @ b, lower=False)


def qr_factor(m, rank_tolerance: float | None = None) -> QrFactorization:
    """Householder QR of ``m`` (LAPACK ``geqrf``), deterministic for fixed input.

    ``rank`` counts diagonal entries of ``R`` above ``rank_tolerance``; when the
    tolerance is omitted it defaults to ``1e-10 * max(rows, cols) * max|R_ii|``.
    """
    a = as_matrix(m)
    if rank_tolerance is not None and not rank_tolerance > 0:
        raise ValueError("rank_tolerance must be positive")
    q, r = scipy.linalg.qr(a, mode="economic")
    diag = np.abs(np.diag(r))
    tol = default_rank_tolerance(a.shape, diag) if rank_tolerance is None else rank_tolerance
    rank = int(np.count_nonzero(diag > tol))
    return QrFactorization(q=q, r=r, rank=rank, rank_tolerance=tol)


def least_squares_solve(m, b, rank_tolerance: float | None = None) -> np.ndarray:
    """Solve ``min ||m x - b||_2`` for a full-column-rank ``m``.

    Raises
    ------
    RankDeficient
        If the numerical rank of ``m`` is below its column count.
    """
    fac = qr_factor(m, rank_tolerance)
    return fac.solve(b)


@dataclass(frozen=True)
class Projector:
    """Orthogonal projector onto the complement of ``range(a2)``.

    ``a2_pseudo`` holds the QR factors of ``a2`` and back-solves the dense
    block in the least-squares sense.
    """

    p: np.ndarray
    a2_pseudo: QrFactorization | None

    def apply(self, v) -> np.ndarray:
        return self.p @ np.asarray(v, dtype=np.float64)


def build_projector(a2, k: int | None = None) -> Projector:
    """Return ``P = I - A2 (A2^T A2)^{-1} A2^T`` built from the QR of ``a2``.

    ``a2`` may have zero columns (pass ``k`` or a ``k x 0`` array), in which
    case ``P`` is the identity.
    """
    a2 = np.asarray(a2, dtype=np.float64)
    if a2.ndim != 2:
        raise DimensionMismatch("a2 must be 2-D")
    rows = a2.shape[0] if k is None else k
    if a2.shape[1] == 0:
        return Projector(p=np.eye(rows), a2_pseudo=None)
    a2 = as_matrix(a2)
    if a2.shape[1] > a2.shape[0]:
        raise RankDeficient("dense block has more columns than rows")
    fac = qr_factor(a2)
    if not fac.full_column_rank:
        raise RankDeficient(f"dense block has rank {fac.rank} < {a2.shape[1]} columns")
    p = np.eye(rows) - fac.q @ fac.q.T
    p = 0.5 * (p + p.T)
    return Projector(p=p, a2_pseudo=fac)


def null_space_basis(m, tol: float | None = None) -> np.ndarray:
    """Orthonormal basis of ``null(m)`` from a column-pivoted full QR of ``m^T``."""
    a = as_matrix(m)
    rows, cols = a.shape
    q, r, _ = scipy.linalg.qr(a.T, mode="full", pivoting=True)
    diag = np.abs(np.diag(r))
    tol = default_rank_tolerance(a.shape, diag) if tol is None else tol
    rank = int(np.count_nonzero(diag > tol))
    return q[:, rank:].copy()


def row_space_basis(m, tol: float | None = None) -> np.ndarray:
    """Orthonormal basis of ``range(m^T)``, complement of :func:`null_space_basis`."""
    a = as_matrix(m)
    q, r, _ = scipy.linalg.qr(a.T, mode="full", pivoting=True)
    diag = np.abs(np.diag(r))
    tol = default_rank_tolerance(a.shape, diag) if tol is None else tol
    rank = int(np.count_nonzero(diag > tol))
    return q[:, :rank].copy()


def _check_symmetric(g: np.ndarray) -> None:
    scale = max(1.0, float(np.max(np.abs(g)))) if g.size else 1.0
    if g.size and np.max(np.abs(g - np.swapaxes(g, -1, -2))) > 1e-10 * scale:
        raise NotSymmetric("matrix is not symmetric within 1e-10")


def sym_eig_batch(g) -> np.ndarray:
    """Eigenvalues of a stack ``(batch, n, n)`` of symmetric matrices.

    Cyclic Jacobi rotations are applied to the whole stack at once; sweeps stop
    when every member's off-diagonal Frobenius mass is at most
    ``1e-12 * ||G||_F``. Rows of the result are sorted ascending.
    """
    a = np.array(g, dtype=np.float64, copy=True)
    if a.ndim != 3 or a.shape[1] != a.shape[2]:
        raise DimensionMismatch(f"expected (batch, n, n), got {a.shape}")
    if not np.all(np.isfinite(a)):
        raise NonFiniteInput("matrix contains NaN or Inf")
    _check_symmetric(a)
    a = 0.5 * (a + np.swapaxes(a, 1, 2))
    n = a.shape[1]
    if n == 0 or a.shape[0] == 0:
        return np.zeros((a.shape[0], n))
    target = JACOBI_REL_TOL * np.sqrt(np.sum(a * a, axis=(1, 2)))
    off_mask = ~np.eye(n, dtype=bool)

    with np.errstate(over="ignore", divide="ignore"):
        _jacobi_sweeps(a, target, off_mask)
    return np.sort(np.diagonal(a, axis1=1, axis2=2), axis=1)


def _round_robin(n: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Pairings covering every (p, q) once per sweep, n/2 disjoint pairs per round."""
    m = n + (n % 2)
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        pairs = [(players[i], players[m - 1 - i]) for i in range(m // 2)]
        pairs = [(min(p, q), max(p, q)) for p, q in pairs if p < n and q < n]
        rounds.append((np.array([p for p, _ in pairs]), np.array([q for _, q in pairs])))
        players = [players[0], players[-1]] + players[1:-1]
    return rounds


def _jacobi_sweeps(a: np.ndarray, target: np.ndarray, off_mask: np.ndarray) -> None:
    """Cyclic Jacobi in round-robin order; disjoint rotations of a round are applied together."""
    batch, n, _ = a.shape
    rounds = _round_robin(n)
    eye = np.broadcast_to(np.eye(n), (batch, n, n))
    for _ in range(JACOBI_MAX_SWEEPS):
        off = np.sqrt(np.sum(a[:, off_mask] ** 2, axis=1))
        if np.all(off <= target):
            break
        for p, q in rounds:
            apq = a[:, p, q]
            active = apq != 0.0
            if not np.any(active):
                continue
            safe = np.where(active, apq, 1.0)
            theta = (a[:, q, q] - a[:, p, p]) / (2.0 * safe)
            huge = np.abs(theta) > 1e100
            th = np.where(huge, 1.0, theta)
            t = np.where(th >= 0, 1.0, -1.0) / (np.abs(th) + np.sqrt(th * th + 1.0))
            t = np.where(huge, 0.5 / np.where(huge, theta, 1.0), t)
            t = np.where(active, t, 0.0)
            c = 1.0 / np.sqrt(t * t + 1.0)
            s = t * c
            rot = eye.copy()
            rot[:, p, p] = c
            rot[:, q, q] = c
            rot[:, p, q] = s
            rot[:, q, p] = -s
            a[:] = np.swapaxes(rot, 1, 2) @ a @ rot
            a[:, p, q] = 0.0
            a[:, q, p] = 0.0


def sym_eig(g) -> np.ndarray:
    """Ascending eigenvalues of a symmetric matrix by cyclic Jacobi."""
    a = as_matrix(g)
    if a.shape[0] != a.shape[1]:
        raise NotSymmetric("matrix is not square")
    return sym_eig_batch(a[None])[0]


def spectral_norm(m) -> float:
    """Largest singular value, from the smaller of the two Gram matrices."""
    a = as_matrix(m, allow_empty=True)
    if a.size == 0:
        return 0.0
    gram = a.T @ a if a.shape[1] <= a.shape[0] else a @ a.T
    gram = 0.5 * (gram + gram.T)
    lam = sym_eig(gram)
    return float(np.sqrt(max(lam[-1], 0.0)))
