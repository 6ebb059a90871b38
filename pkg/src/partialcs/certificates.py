"""Exact desk-scale certificates for sparse and partially sparse recovery.

Every check enumerates supports exhaustively and refuses (``TooLarge``)
rather than sample when the enumeration would exceed its cap. Supports are
visited in lexicographic order and the first maximizer wins ties.
"""
from __future__ import annotations

import hashlib
import itertools
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import DomainError, NoSolution, RankDeficient, TooLarge
from .linalg import (
    as_matrix,
    as_vector,
    least_squares_solve,
    row_space_basis,
    null_space_basis,
    spectral_norm,
    sym_eig,
    sym_eig_batch,
)
from .partial import PartitionedMatrix
from .solvers import linprog_equality

__all__ = [
    "DEFAULT_CAP",
    "STRICT_MARGIN",
    "NspReport",
    "RipReport",
    "C1C2Bounds",
    "L0Result",
    "matrix_hash",
    "rip_constant",
    "partial_rip_constant",
    "mixed_rip_constant",
    "nsp_check",
    "partial_nsp_check",
    "signed_support_ratio",
    "recovery_guarantee",
    "c1_c2",
    "check_c1_c2_bounds",
    "gaussian_sample_bound",
    "best_s_term_error",
    "exhaustive_l0",
]

DEFAULT_CAP = 2_000_000
STRICT_MARGIN = 1e-9
_CHUNK = 4096


def matrix_hash(a) -> str:
    a = np.ascontiguousarray(np.asarray(a, dtype=np.float64))
    h = hashlib.sha256()
    h.update(repr(a.shape).encode())
    h.update(a.tobytes())
    return h.hexdigest()


def _jsonable(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, tuple):
        return list(value)
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    return value


@dataclass(frozen=True)
class RipReport:
    """Exhaustively computed restricted isometry constant."""

    order: int
    delta: float
    witness_support: tuple[int, ...]
    extreme_eigenvalue: float
    property: str = "rip"
    matrix_hash: str = ""
    supports_checked: int = 0
    tolerances: dict = field(default_factory=lambda: {"jacobi_rel": 1e-12})

    def to_dict(self) -> dict:
        return {k: _jsonable(v) for k, v in asdict(self).items()}


@dataclass(frozen=True)
class NspReport:
    """Null space property verdict with a failure witness when it does not hold."""

    holds: bool
    order: int
    worst_ratio: float
    witness_v: np.ndarray | None = None
    witness_support: tuple[int, ...] | None = None
    property: str = "nsp"
    matrix_hash: str = ""
    exhaustive: bool = True
    tolerances: dict = field(default_factory=lambda: {"strict_margin": STRICT_MARGIN})

    def to_dict(self) -> dict:
        out = {k: _jsonable(v) for k, v in asdict(self).items()}
        out["witness_vector"] = out.pop("witness_v")
        return out


def _check_cap(count: int, cap: int) -> None:
    if count > cap:
        raise TooLarge(f"enumeration of {count} cases exceeds cap {cap}")


def _rip_over_supports(a: np.ndarray, supports, fixed: np.ndarray) -> tuple[float, tuple, float, int]:
    """Max eigenvalue deviation of Gram matrices of ``a[:, S + fixed]``."""
    best = (-1.0, (), 1.0)
    count = 0
    supports = iter(supports)
    while True:
        chunk = list(itertools.islice(supports, _CHUNK))
        if not chunk:
            break
        idx = np.array(chunk, dtype=np.intp).reshape(len(chunk), -1)
        if fixed.size:
            idx = np.hstack([idx, np.broadcast_to(fixed, (len(chunk), fixed.size))])
        sub = np.transpose(a[:, idx], (1, 0, 2))
        gram = np.einsum("bki,bkj->bij", sub, sub)
        lam = sym_eig_batch(gram)
        upper = lam[:, -1] - 1.0
        lower = 1.0 - lam[:, 0]
        dev = np.maximum(upper, lower)
        j = int(np.argmax(dev))
        if dev[j] > best[0]:
            extreme = lam[j, -1] if upper[j] >= lower[j] else lam[j, 0]
            best = (float(dev[j]), tuple(int(i) for i in idx[j]), float(extreme))
        count += len(chunk)
    return max(best[0], 0.0), best[1], best[2], count


def rip_constant(a, s: int, cap: int = DEFAULT_CAP) -> RipReport:
    """Order-``s`` RIP constant of ``a`` by enumerating all ``C(N, s)`` supports.

    ``delta = max_S max(lambda_max(G_S) - 1, 1 - lambda_min(G_S))`` with
    ``G_S = A_S^T A_S``.
    """
    a = as_matrix(a)
    n = a.shape[1]
    if not 1 <= s <= n:
        raise DomainError(f"order s={s} must lie in [1, {n}]")
    _check_cap(math.comb(n, s), cap)
    delta, support, extreme, count = _rip_over_supports(
        a, itertools.combinations(range(n), s), np.zeros(0, dtype=np.intp)
    )
    return RipReport(s, delta, support, extreme, "rip", matrix_hash(a), count)


def partial_rip_constant(part: PartitionedMatrix, s: int, cap: int = DEFAULT_CAP) -> RipReport:
    """RIP constant of order ``s - r`` of the projected block ``P A1``."""
    if part.r > s:
        raise DomainError(f"r={part.r} exceeds s={s}")
    order = s - part.r
    h = matrix_hash(part.a)
    if order == 0:
        return RipReport(0, 0.0, (), 1.0, "partial-rip", h, 0)
    rep = rip_constant(part.pa1, order, cap)
    return RipReport(order, rep.delta, rep.witness_support, rep.extreme_eigenvalue, "partial-rip", h,
                     rep.supports_checked)


def mixed_rip_constant(part: PartitionedMatrix, s: int, cap: int = DEFAULT_CAP) -> RipReport:
    """Smallest delta with the RIP inequality over ``(x1, x2)``, ``x1`` (s-r)-sparse, ``x2`` dense.

    Each Gram matrix is that of ``[A1_S, A2]`` for ``S`` of size ``s - r``.
    """
    if part.r > s:
        raise DomainError(f"r={part.r} exceeds s={s}")
    n1 = part.n - part.r
    order = s - part.r
    if order > n1:
        raise DomainError(f"s - r = {order} exceeds N - r = {n1}")
    h = matrix_hash(part.a)
    if s == 0:
        return RipReport(0, 0.0, (), 1.0, "mixed-rip", h, 0)
    _check_cap(math.comb(n1, order), cap)
    fixed = np.arange(n1, part.n, dtype=np.intp)
    delta, support, extreme, count = _rip_over_supports(
        part.a, itertools.combinations(range(n1), order), fixed
    )
    return RipReport(s, delta, support, extreme, "mixed-rip", h, count)


def _sign_patterns(s: int):
    # sigma and -sigma give the same optimum (u -> -u), so fix the first sign.
    for rest in itertools.product((1.0, -1.0), repeat=s - 1):
        yield (1.0,) + rest


def _ratio_lp(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Constraints ``u in null(A)``, ``||u||_1 = 1`` in split variables ``(u+, u-, slack)``."""
    n = a.shape[1]
    rows = row_space_basis(a)
    d = rows.shape[1]
    a_eq = np.zeros((d + 1, 2 * n + 1))
    a_eq[:d, :n] = rows.T
    a_eq[:d, n:2 * n] = -rows.T
    a_eq[d, :] = 1.0
    b_eq = np.zeros(d + 1)
    b_eq[d] = 1.0
    return a_eq, b_eq


def _signed_ratio(a_eq, b_eq, n: int, idx: np.ndarray, sigma: np.ndarray) -> tuple[float, np.ndarray]:
    c = np.zeros(2 * n + 1)
    c[idx] = -sigma
    c[n + idx] = sigma
    z, val, _ = linprog_equality(c, a_eq, b_eq)
    return -val, z[:n] - z[n:2 * n]


def signed_support_ratio(a, support, signs) -> tuple[float, np.ndarray]:
    """``max sigma^T u_S`` over ``u in null(A)`` with ``||u||_1 <= 1``.

    Every vector with support ``S`` and sign pattern ``sigma`` is the unique
    l1 minimizer of its own measurements iff the value is below 1/2. Returns
    the value and a maximizing ``u`` (zero when the null space is trivial).
    """
    a = as_matrix(a)
    n = a.shape[1]
    idx = np.asarray(support, dtype=int).reshape(-1)
    sigma = np.asarray(signs, dtype=np.float64).reshape(-1)
    if idx.size != sigma.size:
        raise DomainError("support and signs differ in length")
    if idx.size and (idx.min() < 0 or idx.max() >= n or np.unique(idx).size != idx.size):
        raise DomainError("support indices must be distinct and in range")
    if null_space_basis(a).shape[1] == 0 or idx.size == 0:
        return 0.0, np.zeros(n)
    a_eq, b_eq = _ratio_lp(a)
    val, u = _signed_ratio(a_eq, b_eq, n, idx, np.sign(sigma))
    return float(max(val, 0.0)), u


def nsp_check(a, s: int, cap: int = DEFAULT_CAP, *, early_exit: bool = False,
              _property: str = "nsp") -> NspReport:
    """Decide the null space property of order ``s`` exactly.

    For each support ``S`` and sign pattern ``sigma`` the linear program

        max  sigma^T u_S   s.t.  u in null(A),  ||u||_1 <= 1

    is solved with the simplex engine; membership in the null space is
    imposed through an orthonormal basis of the row space. The worst ratio is
    the maximum over all ``(S, sigma)``; NSP holds iff it is below 1/2.

    With ``early_exit`` the search stops at the first ``(S, sigma)`` whose
    value reaches 1/2. The verdict is still exact, but ``worst_ratio`` is then
    only a lower bound and ``exhaustive`` is False.
    """
    a = as_matrix(a)
    n = a.shape[1]
    if not 0 <= s <= n:
        raise DomainError(f"order s={s} must lie in [0, {n}]")
    h = matrix_hash(a)
    if s >= 1:
        _check_cap(math.comb(n, s) * 2**s, cap)
    basis = null_space_basis(a)
    if basis.shape[1] == 0 or s == 0:
        return NspReport(True, s, 0.0, None, None, _property, h)

    a_eq, b_eq = _ratio_lp(a)
    best_val = -np.inf
    best_u = None
    best_support = None
    for support in itertools.combinations(range(n), s):
        idx = np.array(support)
        for sigma in _sign_patterns(s):
            val, u = _signed_ratio(a_eq, b_eq, n, idx, np.asarray(sigma))
            if val > best_val:
                best_val = val
                best_u = u
                best_support = support
            if early_exit and best_val >= 0.5 - STRICT_MARGIN:
                break
        if early_exit and best_val >= 0.5 - STRICT_MARGIN:
            break
    worst = float(min(max(best_val, 0.0), 1.0))
    holds = worst < 0.5 - STRICT_MARGIN
    if holds:
        return NspReport(True, s, worst, None, None, _property, h)
    return NspReport(False, s, worst, best_u, tuple(int(i) for i in best_support), _property, h,
                     exhaustive=not early_exit)


def partial_nsp_check(part: PartitionedMatrix, s: int, cap: int = DEFAULT_CAP, *,
                      early_exit: bool = False) -> NspReport:
    """Partial NSP of order ``s - r``.

    ``{v1 : A1 v1 in range(A2)}`` is exactly ``null(P A1)``, so this is the
    classical check on the projected block. ``A2``'s rank was validated when
    the partition was built.
    """
    if part.r > s:
        raise DomainError(f"r={part.r} exceeds s={s}")
    order = s - part.r
    n1 = part.n - part.r
    if n1 == 0 or order == 0:
        return NspReport(True, order, 0.0, None, None, "partial-nsp", matrix_hash(part.a))
    if part.r == part.k:
        # P = 0: every v1 is admissible, so the ratio is attained by a unit vector.
        v = np.zeros(n1)
        v[0] = 1.0
        return NspReport(False, order, 1.0, v, tuple(range(order)), "partial-nsp", matrix_hash(part.a))
    rep = nsp_check(part.pa1, order, cap, early_exit=early_exit, _property="partial-nsp")
    return NspReport(rep.holds, order, rep.worst_ratio, rep.witness_v, rep.witness_support,
                     "partial-nsp", matrix_hash(part.a), exhaustive=rep.exhaustive)


def recovery_guarantee(delta_2s: float) -> bool:
    """Whether ``delta_2s < sqrt(2) - 1`` (strict, with a 1e-9 margin)."""
    if delta_2s < 0:
        raise DomainError("delta must be nonnegative")
    return delta_2s < math.sqrt(2.0) - 1.0 - STRICT_MARGIN


def c1_c2(part: PartitionedMatrix) -> tuple[float, float]:
    """``C1 = ||A1||_2`` and ``C2 = ||A2^+||_2 = 1 / sigma_min(A2)``.

    ``C2`` is reported as 0 when there is no dense block.
    """
    c1 = spectral_norm(part.a1) if part.a1.shape[1] else 0.0
    if part.r == 0:
        return c1, 0.0
    a2 = part.a2
    lam_min = sym_eig(a2.T @ a2)[0]
    if lam_min <= 0:
        raise RankDeficient("dense block is rank deficient")
    return c1, float(1.0 / math.sqrt(lam_min))


@dataclass(frozen=True)
class C1C2Bounds:
    order: int
    delta_s: float
    c1: float
    c2: float
    c1_bound: float
    c2_bound: float
    c1_slack: float
    c2_slack: float
    c1_holds: bool
    c2_holds: bool
    c1_order_sufficient: bool

    def to_dict(self) -> dict:
        return asdict(self)


def check_c1_c2_bounds(part: PartitionedMatrix, s: int, cap: int = DEFAULT_CAP) -> C1C2Bounds:
    """Compare ``C1, C2`` with ``sqrt(1 + delta_s)`` and ``1 / sqrt(1 - delta_s)``.

    The ``C2`` bound is implied whenever ``s >= r``. The ``C1`` bound is only
    implied when ``s >= N - r``; otherwise it is evaluated and flagged via
    ``c1_order_sufficient = False``.
    """
    if s < part.r:
        raise DomainError(f"order s={s} must be at least r={part.r}")
    delta = rip_constant(part.a, s, cap).delta
    c1, c2 = c1_c2(part)
    c1_bound = math.sqrt(1.0 + delta)
    c2_bound = math.inf if delta >= 1.0 else 1.0 / math.sqrt(1.0 - delta)
    tol = 1e-9
    return C1C2Bounds(
        order=s,
        delta_s=delta,
        c1=c1,
        c2=c2,
        c1_bound=c1_bound,
        c2_bound=c2_bound,
        c1_slack=c1_bound - c1,
        c2_slack=c2_bound - c2,
        c1_holds=c1 <= c1_bound + tol,
        c2_holds=c2 <= c2_bound + tol,
        c1_order_sufficient=s >= part.n - part.r,
    )


def gaussian_sample_bound(n: int, s: int, r: int, delta: float) -> float:
    """Measurements sufficient for partial RIP of a Gaussian matrix w.h.p.

    ``96 / (3 delta^2 - delta^3) * ((s - r) ln(e (N - r) / (s - r)) + s ln(12 / delta))``
    with natural logarithms; the first term vanishes when ``s == r``.
    """
    if not 0.0 < delta < 1.0:
        raise DomainError(f"delta={delta} must lie in (0, 1)")
    if not 0 <= r <= s < n:
        raise DomainError("need 0 <= r <= s < n")
    m = s - r
    sparse_term = m * (math.log((n - r) / m) + 1.0) if m > 0 else 0.0
    return 96.0 / (3.0 * delta**2 - delta**3) * (sparse_term + s * math.log(12.0 / delta))


def best_s_term_error(x, s: int) -> float:
    """l1 distance from ``x`` to its best ``s``-sparse approximation."""
    x = as_vector(x)
    if s < 0:
        raise DomainError(f"s={s} must be nonnegative")
    mags = np.sort(np.abs(x))[::-1]
    return float(mags[s:].sum())


@dataclass(frozen=True)
class L0Result:
    x: np.ndarray
    sparsity: int
    unique: bool


def exhaustive_l0(a, y, s_max: int, cap: int = DEFAULT_CAP) -> L0Result:
    """Sparsest ``x`` with ``A x = y`` by enumerating supports of growing size.

    A support is accepted when its least-squares residual is at most
    ``1e-8 (1 + ||y||)``. Supports with dependent columns are skipped: any
    consistent vector on them has a sparser consistent representative.
    """
    a = as_matrix(a)
    n = a.shape[1]
    y = as_vector(y, a.shape[0])
    s_max = min(s_max, n)
    _check_cap(sum(math.comb(n, m) for m in range(s_max + 1)), cap)
    tol = 1e-8 * (1.0 + float(np.linalg.norm(y)))
    if np.linalg.norm(y) <= tol:
        return L0Result(np.zeros(n), 0, True)
    for m in range(1, s_max + 1):
        found = []
        for support in itertools.combinations(range(n), m):
            cols = a[:, support]
            try:
                xs = least_squares_solve(cols, y)
            except RankDeficient:
                continue
            if np.linalg.norm(cols @ xs - y) <= tol:
                found.append((support, xs))
        if found:
            support, xs = found[0]
            x = np.zeros(n)
            x[list(support)] = xs
            return L0Result(x, m, len(found) == 1)
    raise NoSolution(f"no consistent vector with at most {s_max} nonzeros")
