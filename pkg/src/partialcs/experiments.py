"""Recovery trials and Monte Carlo sweeps over Gaussian ensembles.

A trial draws ``A`` (``k x n``, entries ``N(0, 1/k)``), a planted ``x`` whose
first ``n - r`` entries are ``(s - r)``-sparse, and noise on the ``eta`` ball;
it then runs projected recovery and measures the errors of both blocks.

Instance seeds depend on ``(k, n, s, r, trial)`` but not on ``eta``: an
``eta`` sweep reuses the same matrix, signal and noise direction and only
rescales the noise.
"""
from __future__ import annotations

import csv
import io
import json
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import NamedTuple

import numpy as np

from .certificates import best_s_term_error, c1_c2, gaussian_sample_bound, partial_nsp_check
from .errors import InsufficientData, PartialCSError, RankDeficient
from .partial import PartiallySparseSignal, recover_projected, split_matrix
from .randgen import MagnitudeLaw, Seed, SignalModel, gaussian_matrix, noise_on_ball, parse_seed, planted_signal
from .solvers import SolveOptions

log = logging.getLogger(__name__)

__all__ = [
    "Cell",
    "ExperimentConfig",
    "TrialRecord",
    "CellSummary",
    "PhaseTable",
    "BoundFit",
    "BoundReport",
    "run_trial",
    "phase_diagram",
    "verify_noisy_bounds",
    "compressible_sweep",
    "compare_full_vs_partial",
    "parse_config",
    "load_config",
    "CSV_HEADER",
]

CSV_HEADER = ["k", "n", "s", "r", "eta", "trials", "successes", "rate", "mean_err_x1", "mean_err_x2",
              "bound_violations"]
BOUND_SLACK = 1e-8
MAX_REDRAWS = 16


class Cell(NamedTuple):
    k: int
    n: int
    s: int
    r: int
    eta: float


@dataclass(frozen=True)
class ExperimentConfig:
    """Grid and tuning for a sweep.

    Cells are the product of ``k_values``, ``r_values``, ``eta_values`` and
    either ``s_values`` (total sparsity ``s``) or, when given,
    ``sparse_values`` (sparsity ``s - r`` of the first block). Cells with
    ``r > s``, ``r > k`` or ``s - r > n - r`` are skipped.
    """

    n: int
    k_values: tuple[int, ...]
    r_values: tuple[int, ...] = (0,)
    s_values: tuple[int, ...] = ()
    sparse_values: tuple[int, ...] = ()
    eta_values: tuple[float, ...] = (0.0,)
    trials_per_cell: int = 10
    success_threshold: float = 1e-4
    base_seed: int = 0
    signal_model: SignalModel = field(default_factory=SignalModel)
    solver_opts: SolveOptions = field(default_factory=lambda: SolveOptions(adaptive=True))
    pivot_rule: str = "dantzig"
    boundary_noise: bool = True
    certify: bool = False
    target_rate: float = 0.9
    bound_delta: float = 0.5

    def __post_init__(self):
        for name in ("k_values", "r_values", "eta_values", "s_values", "sparse_values"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        if not self.k_values or not self.r_values or not self.eta_values:
            raise ValueError("k, r and eta grids must be nonempty")
        if not self.s_values and not self.sparse_values:
            raise ValueError("give s_values or sparse_values")
        if self.trials_per_cell < 1:
            raise ValueError("trials_per_cell must be >= 1")
        if not self.success_threshold > 0:
            raise ValueError("success_threshold must be positive")
        if any(e < 0 for e in self.eta_values):
            raise ValueError("eta must be nonnegative")

    def cells(self) -> list[Cell]:
        out = set()
        for k in self.k_values:
            for r in self.r_values:
                totals = [r + m for m in self.sparse_values] if self.sparse_values else list(self.s_values)
                for s in totals:
                    if r > s or r > k or s - r > self.n - r or s > self.n:
                        continue
                    for eta in self.eta_values:
                        out.add(Cell(int(k), int(self.n), int(s), int(r), float(eta)))
        return sorted(out)

    def instance_seed(self, cell: Cell, trial: int) -> Seed:
        return Seed(self.base_seed).child(cell.k, cell.n, cell.s, cell.r, trial)


@dataclass(frozen=True)
class TrialRecord:
    cell: Cell
    seed: Seed
    trial: int
    err_x1: float
    err_x2: float
    success: bool
    bound_rhs_x2: float
    bound_ok: bool
    converged: bool
    solver_iterations: int
    wall_time_ms: float
    c1: float = math.nan
    c2: float = math.nan
    certified: bool | None = None
    reason: str = ""

    def to_dict(self) -> dict:
        d = asdict(self)
        d["cell"] = dict(self.cell._asdict())
        d["seed"] = {"base": self.seed.base, "stream": self.seed.stream}
        return d


def _draw_partition(cell: Cell, seed: Seed):
    attempt_seed = seed.child("matrix")
    for attempt in range(MAX_REDRAWS):
        a = gaussian_matrix(cell.k, cell.n, attempt_seed)
        try:
            return split_matrix(a, cell.r)
        except RankDeficient:
            log.warning("rank-deficient dense block for %s (attempt %d); redrawing", cell, attempt)
            attempt_seed = attempt_seed.next_stream()
    raise RankDeficient(f"could not draw a full-rank dense block for {cell}")


def run_trial(
    cell: Cell,
    seed: Seed,
    *,
    model: SignalModel | None = None,
    opts: SolveOptions | None = None,
    success_threshold: float = 1e-4,
    boundary_noise: bool = True,
    certify: bool = False,
    pivot_rule: str = "dantzig",
    trial: int = 0,
    signal: PartiallySparseSignal | None = None,
) -> TrialRecord:
    """One plant-and-recover experiment, deterministic in ``(cell, seed)``.

    ``signal`` overrides the planted signal (used for compressible plants).
    """
    start = time.perf_counter()
    part = _draw_partition(cell, seed)
    if signal is None:
        signal = planted_signal(cell.n - cell.r, cell.s - cell.r, cell.r, model, seed.child("signal"))
    noise = noise_on_ball(cell.k, cell.eta, seed.child("noise"), boundary_noise)
    y = part.a @ signal.x + noise
    c1, c2 = c1_c2(part)
    certified = partial_nsp_check(part, cell.s, early_exit=True).holds if certify else None
    try:
        sol = recover_projected(part, y, cell.eta, opts, pivot_rule=pivot_rule)
    except PartialCSError as exc:
        return TrialRecord(cell, seed, trial, math.nan, math.nan, False, math.nan, False, False, 0,
                           1e3 * (time.perf_counter() - start), c1, c2, certified,
                           f"{type(exc).__name__}: {exc}")
    err1 = float(np.linalg.norm(sol.x1 - signal.x1))
    err2 = float(np.linalg.norm(sol.x2 - signal.x2))
    rhs = c2 * (2.0 * cell.eta + c1 * err1)
    success = err1 <= success_threshold * (1.0 + float(np.linalg.norm(signal.x1)))
    return TrialRecord(
        cell=cell,
        seed=seed,
        trial=trial,
        err_x1=err1,
        err_x2=err2,
        success=bool(success),
        bound_rhs_x2=rhs,
        bound_ok=bool(err2 <= rhs + BOUND_SLACK),
        converged=sol.x1_report.converged,
        solver_iterations=sol.x1_report.iterations,
        wall_time_ms=1e3 * (time.perf_counter() - start),
        c1=c1,
        c2=c2,
        certified=certified,
    )


@dataclass(frozen=True)
class CellSummary:
    cell: Cell
    trials: int
    successes: int
    mean_err_x1: float
    mean_err_x2: float
    bound_violations: int

    @property
    def rate(self) -> float:
        return self.successes / self.trials if self.trials else 0.0

    def row(self) -> list:
        c = self.cell
        return [c.k, c.n, c.s, c.r, repr(c.eta), self.trials, self.successes, repr(self.rate),
                repr(self.mean_err_x1), repr(self.mean_err_x2), self.bound_violations]


@dataclass(frozen=True)
class PhaseTable:
    rows: list[CellSummary]
    records: list[TrialRecord]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for row in self.rows:
            w.writerow(row.row())
        return buf.getvalue()

    def to_json(self, full: bool = False) -> str:
        doc = {"header": CSV_HEADER, "rows": [dict(zip(CSV_HEADER, r.row())) for r in self.rows]}
        if full:
            doc["trials"] = [_json_safe(t.to_dict()) for t in self.records]
        return json.dumps(doc, indent=1, sort_keys=True)

    def lookup(self, k: int, s: int, r: int, eta: float = 0.0) -> CellSummary | None:
        for row in self.rows:
            c = row.cell
            if (c.k, c.s, c.r, c.eta) == (k, s, r, eta):
                return row
        return None


def _json_safe(obj):
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def _summarize(cell: Cell, recs: list[TrialRecord]) -> CellSummary:
    ok = [t for t in recs if not t.reason]
    mean1 = float(np.mean([t.err_x1 for t in ok])) if ok else math.nan
    mean2 = float(np.mean([t.err_x2 for t in ok])) if ok else math.nan
    violations = sum(1 for t in ok if t.converged and not t.bound_ok)
    return CellSummary(cell, len(recs), sum(t.success for t in recs), mean1, mean2, violations)


def _run_all(cfg: ExperimentConfig, threads: int = 1, cells: list[Cell] | None = None):
    cells = cfg.cells() if cells is None else cells
    jobs = [(cell, t) for cell in cells for t in range(cfg.trials_per_cell)]

    def work(job):
        cell, t = job
        return run_trial(
            cell,
            cfg.instance_seed(cell, t),
            model=cfg.signal_model,
            opts=cfg.solver_opts,
            success_threshold=cfg.success_threshold,
            boundary_noise=cfg.boundary_noise,
            certify=cfg.certify,
            pivot_rule=cfg.pivot_rule,
            trial=t,
        )

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            records = list(pool.map(work, jobs))
    else:
        records = [work(j) for j in jobs]
    by_cell: dict[Cell, list[TrialRecord]] = {c: [] for c in cells}
    for rec in records:
        by_cell[rec.cell].append(rec)
    return by_cell, records


def phase_diagram(cfg: ExperimentConfig, threads: int = 1) -> PhaseTable:
    """Success rate per ``(k, n, s, r, eta)`` cell, rows in lexicographic cell order."""
    by_cell, records = _run_all(cfg, threads)
    rows = [_summarize(c, by_cell[c]) for c in sorted(by_cell)]
    return PhaseTable(rows, records)


@dataclass(frozen=True)
class BoundFit:
    """Least-squares line ``err_x1 ~ slope * eta + intercept`` for one instance family."""

    k: int
    n: int
    s: int
    r: int
    points: int
    slope: float
    intercept: float
    eta0_max_err: float
    certified_only: bool
    x2_violations: int
    x2_checked: int


@dataclass(frozen=True)
class BoundReport:
    fits: list[BoundFit]
    violations: int
    checked: int
    records: list[TrialRecord]
    constants: str = "c and d are fitted empirically, not asserted"

    def to_dict(self) -> dict:
        return {
            "violations": self.violations,
            "checked": self.checked,
            "constants": self.constants,
            "fits": [asdict(f) for f in self.fits],
        }


def verify_noisy_bounds(cfg: ExperimentConfig, threads: int = 1) -> BoundReport:
    """Check the x2 error bound on every converged trial and fit err_x1 against eta.

    The x2 inequality ``err_x2 <= C2 (2 eta + C1 err_x1)`` is evaluated per
    trial. For x1 the constants are unknown, so a line is fitted per
    ``(k, n, s, r)`` family; when ``cfg.certify`` is set only instances that
    pass the partial NSP check enter the fit.
    """
    etas = sorted(set(cfg.eta_values))
    if len(etas) < 3 or etas[0] != 0.0:
        raise ValueError("eta grid needs at least 3 values including 0")
    by_cell, records = _run_all(cfg, threads)
    for cell, recs in by_cell.items():
        if not any(t.converged for t in recs):
            raise InsufficientData(f"no converged trials in {cell}")

    families: dict[tuple, list[TrialRecord]] = {}
    for rec in records:
        c = rec.cell
        families.setdefault((c.k, c.n, c.s, c.r), []).append(rec)

    fits = []
    total_viol = total_checked = 0
    for key in sorted(families):
        recs = [t for t in families[key] if t.converged]
        checked = len(recs)
        viol = sum(not t.bound_ok for t in recs)
        total_viol += viol
        total_checked += checked
        usable = [t for t in recs if t.certified] if cfg.certify else recs
        if len(usable) < 2 or len({t.cell.eta for t in usable}) < 2:
            slope = intercept = math.nan
        else:
            eta = np.array([t.cell.eta for t in usable])
            err = np.array([t.err_x1 for t in usable])
            design = np.column_stack([eta, np.ones_like(eta)])
            (slope, intercept), *_ = np.linalg.lstsq(design, err, rcond=None)
        zero = [t.err_x1 for t in usable if t.cell.eta == 0.0]
        fits.append(BoundFit(*key, len(usable), float(slope), float(intercept),
                             float(max(zero)) if zero else math.nan, cfg.certify, viol, checked))
    return BoundReport(fits, total_viol, total_checked, records)


def compressible_sweep(
    cell: Cell,
    decays: list[float],
    seed: Seed,
    trials: int = 5,
    pivot_rule: str = "dantzig",
) -> list[dict]:
    """Noiseless recovery of compressible ``x1`` with magnitudes ``decay**i``.

    For each decay rate reports the mean ``err_x1``, the mean best
    ``(s - r)``-term error and the fitted ``d = max err / (sigma / sqrt(s - r))``.
    """
    m = cell.s - cell.r
    if m < 1:
        raise ValueError("compressible sweep needs s - r >= 1")
    out = []
    for decay in decays:
        errs, sigmas, ratios = [], [], []
        for t in range(trials):
            sd = seed.child("compressible", t)
            rng = np.random.Generator(np.random.PCG64(sd.child("perm").key))
            n1 = cell.n - cell.r
            mags = decay ** np.arange(n1, dtype=float)
            x1 = np.zeros(n1)
            x1[rng.permutation(n1)] = mags * np.where(rng.random(n1) < 0.5, -1.0, 1.0)
            x2 = rng.standard_normal(cell.r)
            sig = PartiallySparseSignal(x1, x2, m)
            rec = run_trial(cell, sd, signal=sig, pivot_rule=pivot_rule, trial=t)
            sigma = best_s_term_error(x1, m)
            errs.append(rec.err_x1)
            sigmas.append(sigma)
            ratios.append(rec.err_x1 / (sigma / math.sqrt(m)) if sigma > 0 else 0.0)
        out.append({"decay": decay, "mean_err_x1": float(np.mean(errs)),
                    "mean_sigma": float(np.mean(sigmas)), "d_hat": float(np.max(ratios))})
    return out


def compare_full_vs_partial(cfg: ExperimentConfig, table: PhaseTable | None = None,
                            threads: int = 1) -> list[dict]:
    """Empirical minimal ``k`` reaching ``cfg.target_rate``, per ``(s, r)``, next to the analytic bound.

    The minimal ``k`` is the smallest grid value whose success rate (at
    ``eta = min(eta_values)``) reaches the target; ``None`` if none does.
    """
    if 0 not in cfg.r_values or not any(r > 0 for r in cfg.r_values):
        raise ValueError("r_values must include 0 and at least one positive value")
    table = table or phase_diagram(cfg, threads)
    eta = min(cfg.eta_values)
    groups: dict[tuple[int, int], list[CellSummary]] = {}
    for row in table.rows:
        if row.cell.eta == eta:
            groups.setdefault((row.cell.s, row.cell.r), []).append(row)
    out = []
    for (s, r), rows in sorted(groups.items()):
        rows.sort(key=lambda x: x.cell.k)
        k_min = next((row.cell.k for row in rows if row.rate >= cfg.target_rate), None)
        try:
            bound = gaussian_sample_bound(cfg.n, s, r, cfg.bound_delta)
        except PartialCSError:
            bound = math.nan
        out.append({"n": cfg.n, "s": s, "r": r, "target_rate": cfg.target_rate, "k_min": k_min,
                    "bound": bound, "bound_delta": cfg.bound_delta})
    return out


# --------------------------------------------------------------------------
# config files

_LIST_INT = {"k_values", "r_values", "s_values", "sparse_values"}
_LIST_FLOAT = {"eta_values"}
_INT = {"n", "trials_per_cell"}
_FLOAT = {"success_threshold", "target_rate", "bound_delta"}
_BOOL = {"boundary_noise", "certify"}
_SOLVER = {"max_iters": int, "abs_tol": float, "rel_tol": float, "penalty": float, "adaptive": None,
           "polish": None}
_ALIASES = {"k": "k_values", "r": "r_values", "s": "s_values", "eta": "eta_values", "trials": "trials_per_cell",
            "seed": "base_seed", "sparse": "sparse_values"}


def _parse_bool(v: str) -> bool:
    low = v.strip().lower()
    if low in {"1", "true", "yes", "on"}:
        return True
    if low in {"0", "false", "no", "off"}:
        return False
    raise ValueError(f"not a boolean: {v!r}")


def _parse_int_list(v: str) -> tuple[int, ...]:
    out = []
    for part in v.split(","):
        part = part.strip()
        if not part:
            continue
        if ":" in part:
            bits = [int(b) for b in part.split(":")]
            lo, hi = bits[0], bits[1]
            step = bits[2] if len(bits) > 2 else 1
            out.extend(range(lo, hi + 1, step))
        else:
            out.append(int(part))
    return tuple(out)


def parse_config(text: str, overrides: dict[str, str] | None = None) -> ExperimentConfig:
    """Parse ``key = value`` lines (``#`` comments, comma-separated lists).

    Integer lists also accept ``lo:hi[:step]`` ranges (inclusive).
    """
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value'")
        key, value = (p.strip() for p in line.split("=", 1))
        raw[_ALIASES.get(key, key)] = value
    for key, value in (overrides or {}).items():
        raw[_ALIASES.get(key, key)] = value

    kwargs: dict = {}
    solver: dict = {"adaptive": True}
    model: dict = {}
    for key, value in raw.items():
        if key in _LIST_INT:
            kwargs[key] = _parse_int_list(value)
        elif key in _LIST_FLOAT:
            kwargs[key] = tuple(float(v) for v in value.split(",") if v.strip())
        elif key in _INT:
            kwargs[key] = int(value)
        elif key in _FLOAT:
            kwargs[key] = float(value)
        elif key in _BOOL:
            kwargs[key] = _parse_bool(value)
        elif key == "base_seed":
            kwargs[key] = parse_seed(value)
        elif key == "pivot_rule":
            kwargs[key] = value
        elif key in _SOLVER:
            conv = _SOLVER[key]
            solver[key] = _parse_bool(value) if conv is None else conv(value)
        elif key == "magnitude_law":
            model["magnitude_law"] = MagnitudeLaw(value)
        elif key in {"lo", "hi"}:
            model[key] = float(value)
        else:
            raise ValueError(f"unknown config key {key!r}")
    if "n" not in kwargs or "k_values" not in kwargs:
        raise ValueError("config needs at least n and k_values")
    return ExperimentConfig(signal_model=SignalModel(**model), solver_opts=SolveOptions(**solver), **kwargs)


def load_config(path, overrides: dict[str, str] | None = None) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read(), overrides)


def with_overrides(cfg: ExperimentConfig, **changes) -> ExperimentConfig:
    return replace(cfg, **changes)
