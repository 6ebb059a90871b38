import json
import math

import pytest

from partialcs.errors import InsufficientData
from partialcs.experiments import (
    CSV_HEADER,
    Cell,
    ExperimentConfig,
    compare_full_vs_partial,
    compressible_sweep,
    parse_config,
    phase_diagram,
    run_trial,
    verify_noisy_bounds,
)
from partialcs.randgen import Seed
from partialcs.solvers import SolveOptions


def test_square_system_exact():
    for t in range(5):
        rec = run_trial(Cell(8, 8, 3, 2, 0.0), Seed(1).child(t))
        assert rec.err_x1 <= 1e-8 and rec.err_x2 <= 1e-8 and rec.success


def test_trial_deterministic():
    cell = Cell(10, 16, 4, 2, 0.01)
    a = run_trial(cell, Seed(3), opts=SolveOptions(adaptive=True))
    b = run_trial(cell, Seed(3), opts=SolveOptions(adaptive=True))
    assert (a.err_x1, a.err_x2, a.bound_rhs_x2) == (b.err_x1, b.err_x2, b.bound_rhs_x2)


def test_trial_noisy_bound():
    cell = Cell(20, 40, 5, 2, 0.01)
    for t in range(5):
        rec = run_trial(cell, Seed(9).child(t), opts=SolveOptions(adaptive=True))
        assert rec.converged and rec.bound_ok
        assert rec.err_x2 <= rec.bound_rhs_x2 + 1e-8
        assert rec.bound_rhs_x2 == pytest.approx(rec.c2 * (2 * 0.01 + rec.c1 * rec.err_x1))


def test_trial_certified_cell_succeeds():
    # partial NSP rarely holds for Gaussian draws this small, so look for certified trials
    hits = 0
    for t in range(400):
        rec = run_trial(Cell(10, 14, 3, 2, 0.0), Seed(4).child(t), certify=True)
        if rec.certified:
            hits += 1
            assert rec.success and rec.err_x1 <= 1e-6
        if hits == 2:
            break
    assert hits == 2


def test_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig(n=10, k_values=(), s_values=(2,))
    with pytest.raises(ValueError):
        ExperimentConfig(n=10, k_values=(5,))
    with pytest.raises(ValueError):
        ExperimentConfig(n=10, k_values=(5,), s_values=(2,), trials_per_cell=0)
    with pytest.raises(ValueError):
        ExperimentConfig(n=10, k_values=(5,), s_values=(2,), success_threshold=0.0)


def test_cells_skip_invalid():
    cfg = ExperimentConfig(n=10, k_values=(2, 6), r_values=(0, 3), s_values=(2, 4))
    cells = cfg.cells()
    assert cells == sorted(cells)
    assert all(c.r <= c.s and c.r <= c.k for c in cells)
    assert Cell(2, 10, 2, 3, 0.0) not in cells


def test_sparse_values_grid():
    cfg = ExperimentConfig(n=12, k_values=(6,), r_values=(0, 2), sparse_values=(3,))
    assert {(c.s, c.r) for c in cfg.cells()} == {(3, 0), (5, 2)}


def test_instance_seed_ignores_eta():
    cfg = ExperimentConfig(n=10, k_values=(5,), s_values=(2,))
    assert cfg.instance_seed(Cell(5, 10, 2, 0, 0.0), 3) == cfg.instance_seed(Cell(5, 10, 2, 0, 0.1), 3)
    assert cfg.instance_seed(Cell(5, 10, 2, 0, 0.0), 3) != cfg.instance_seed(Cell(5, 10, 2, 0, 0.0), 4)


def test_phase_table_format_and_square_column():
    cfg = ExperimentConfig(n=12, k_values=(4, 8, 12), r_values=(0, 2), s_values=(3,), trials_per_cell=4,
                           base_seed=2)
    table = phase_diagram(cfg)
    lines = table.to_csv().splitlines()
    assert lines[0] == ",".join(CSV_HEADER)
    assert len(lines) == 1 + 6
    for r in (0, 2):
        assert table.lookup(12, 3, r).rate == 1.0
    doc = json.loads(table.to_json(full=True))
    assert len(doc["trials"]) == 24 and len(doc["rows"]) == 6


def test_phase_parallel_matches_serial():
    cfg = ExperimentConfig(n=14, k_values=(6, 9), r_values=(0, 2), s_values=(3,), trials_per_cell=3,
                           eta_values=(0.0, 0.01), base_seed=8)
    assert phase_diagram(cfg).to_csv() == phase_diagram(cfg, threads=4).to_csv()


def test_phase_rate_monotone_in_k():
    trials = 20
    cfg = ExperimentConfig(n=30, k_values=(6, 10, 14, 18, 22), r_values=(0,), s_values=(4,),
                           trials_per_cell=trials, base_seed=1)
    rates = [row.rate for row in phase_diagram(cfg).rows]
    slack = 2 / math.sqrt(trials)
    assert all(b >= a - slack for a, b in zip(rates, rates[1:]))


def test_phase_rate_monotone_in_r():
    trials = 20
    cfg = ExperimentConfig(n=30, k_values=(10,), r_values=(0, 2, 4), s_values=(6,), trials_per_cell=trials,
                           base_seed=3)
    rates = [row.rate for row in phase_diagram(cfg).rows]
    slack = 2 / math.sqrt(trials)
    assert all(b >= a - slack for a, b in zip(rates, rates[1:]))


def test_verify_bounds_requires_eta_grid():
    cfg = ExperimentConfig(n=10, k_values=(6,), s_values=(2,), eta_values=(0.0, 0.1))
    with pytest.raises(ValueError):
        verify_noisy_bounds(cfg)


def test_verify_bounds_insufficient_data():
    cfg = ExperimentConfig(n=12, k_values=(8,), s_values=(3,), eta_values=(0.0, 0.01, 0.1), trials_per_cell=2,
                           solver_opts=SolveOptions(max_iters=1, adaptive=True))
    with pytest.raises(InsufficientData):
        verify_noisy_bounds(cfg)


def test_verify_bounds_report():
    cfg = ExperimentConfig(n=16, k_values=(10,), r_values=(0, 2), sparse_values=(2,),
                           eta_values=(0.0, 0.005, 0.01, 0.02), trials_per_cell=4, base_seed=5)
    rep = verify_noisy_bounds(cfg)
    assert rep.violations == 0 and rep.checked > 0
    assert len(rep.fits) == 2
    assert "fitted" in rep.to_dict()["constants"]


def test_compressible_sweep_sharpens():
    res = compressible_sweep(Cell(12, 20, 4, 2, 0.0), [0.7, 0.3, 0.05], Seed(2), trials=3)
    errs = [r["mean_err_x1"] for r in res]
    assert errs[0] > errs[-1]
    assert errs[-1] < 1e-3
    for r in res:
        # d_hat is the worst per-trial ratio, so it also bounds the means
        assert r["mean_err_x1"] <= r["d_hat"] * r["mean_sigma"] / math.sqrt(2) + 1e-12


def test_compare_requires_r_grid():
    cfg = ExperimentConfig(n=10, k_values=(6,), r_values=(1,), s_values=(2,))
    with pytest.raises(ValueError):
        compare_full_vs_partial(cfg)


@pytest.mark.filterwarnings("ignore:r == k")
def test_compare_no_sparse_unknowns():
    cfg = ExperimentConfig(n=12, k_values=(2, 3, 4, 5), r_values=(0, 3), s_values=(3,), trials_per_cell=3)
    rows = {row["r"]: row for row in compare_full_vs_partial(cfg)}
    assert rows[3]["k_min"] == 3
    assert rows[3]["bound"] == pytest.approx(96 / 0.625 * 3 * math.log(24))


def test_parse_config():
    text = """
    # grid
    n = 20
    k = 8:16:4, 20
    r = 0, 2
    s = 3
    eta = 0, 0.01
    trials = 5
    seed = 0x10
    max_iters = 500
    magnitude_law = unit
    """
    cfg = parse_config(text, {"trials": "7"})
    assert cfg.k_values == (8, 12, 16, 20)
    assert cfg.eta_values == (0.0, 0.01)
    assert cfg.trials_per_cell == 7 and cfg.base_seed == 16
    assert cfg.solver_opts.max_iters == 500 and cfg.solver_opts.adaptive
    assert cfg.signal_model.magnitude_law.value == "unit"


@pytest.mark.parametrize("text", ["n = 10\n", "n = 10\nk = 5\ns = 2\nbogus = 1\n", "n = 10\nk 5\n"])
def test_parse_config_errors(text):
    with pytest.raises(ValueError):
        parse_config(text)
