import json
import subprocess
import sys

import numpy as np
import pytest

from partialcs.cli import main
from partialcs.matio import read_matrix, read_vector, write_matrix


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture
def planted(tmp_path):
    m, x, y = tmp_path / "m.txt", tmp_path / "x.txt", tmp_path / "y.txt"
    assert run("gen", "matrix", "--seed", "0x2a", "--k", 10, "--n", 14, "--out", m) == 0
    assert run("gen", "signal", "--seed", 7, "--n", 14, "--r", 2, "--sparsity", 2, "--out", x,
               "--matrix", m, "--y-out", y) == 0
    return m, x, y


def test_certify_rip_orthonormal(tmp_path, capsys):
    q, _ = np.linalg.qr(np.random.default_rng(0).standard_normal((6, 4)))
    path = tmp_path / "q.txt"
    write_matrix(path, q)
    assert run("certify", "rip", "--matrix", path, "--order", 2) == 0
    out = capsys.readouterr().out
    delta = float(out.split("delta = ")[1].split()[0])
    assert delta <= 1e-12


def test_recover_matches_plant(planted, tmp_path, capsys):
    m, x, y = planted
    out = tmp_path / "xhat.txt"
    assert run("recover", "--matrix", m, "--r", 2, "--y", y, "--eta", 0, "--out", out) == 0
    np.testing.assert_allclose(read_vector(out), read_vector(x), atol=1e-6)
    assert run("recover", "--matrix", m, "--r", 2, "--y", y, "--route", "direct") == 0
    assert "x1" in capsys.readouterr().out


def test_bound_value(capsys):
    assert run("bound", "--n", 104, "--s", 5, "--r", 4, "--delta", 0.5) == 0
    assert float(capsys.readouterr().out) == pytest.approx(3301.7, abs=0.01)


def test_gen_is_reproducible(tmp_path):
    a, b = tmp_path / "a.txt", tmp_path / "b.txt"
    for path in (a, b):
        assert run("gen", "matrix", "--seed", 99, "--k", 4, "--n", 6, "--out", path) == 0
    assert a.read_bytes() == b.read_bytes()
    assert read_matrix(a).shape == (4, 6)


def test_gen_noise_within_ball(tmp_path):
    path = tmp_path / "e.txt"
    assert run("gen", "noise", "--seed", 3, "--k", 8, "--eta", 0.05, "--out", path) == 0
    assert np.linalg.norm(read_vector(path)) <= 0.05


def test_solve_outputs(planted, tmp_path):
    m, x, y = planted
    js = tmp_path / "s.json"
    assert run("solve", "--matrix", m, "--y", y, "--method", "splitting", "--out", js) == 0
    doc = json.loads(js.read_text())
    assert doc["status"] == "Converged" and len(doc["x"]) == 14
    csv_out = tmp_path / "s.csv"
    assert run("solve", "--matrix", m, "--y", y, "--out", csv_out) == 0
    assert csv_out.read_text().startswith("dual_residual,")


def test_certify_partial_properties(planted, capsys):
    m, _, _ = planted
    assert run("certify", "partial-rip", "--matrix", m, "--order", 3, "--r", 2) == 0
    assert run("certify", "mixed-rip", "--matrix", m, "--order", 3, "--r", 2) == 0
    assert run("certify", "partial-nsp", "--matrix", m, "--order", 3, "--r", 2) == 0
    assert "holds = " in capsys.readouterr().out


def test_exit_codes(tmp_path, planted, capsys):
    m, _, _ = planted
    assert run("bound", "--n", 10) == 2
    assert run("certify", "partial-rip", "--matrix", m, "--order", 3) == 2
    assert run("bound", "--n", 104, "--s", 5, "--r", 6, "--delta", 0.5) == 1
    bad = tmp_path / "bad.txt"
    write_matrix(bad, np.array([[1.0, 1.0], [1.0, 1.0]]))
    yv = tmp_path / "yv.txt"
    yv.write_text("2 1\n1\n2\n")
    capsys.readouterr()
    assert run("--json-errors", "solve", "--matrix", bad, "--y", yv) == 1
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "Infeasible" and err["exit_code"] == 1
    assert run("certify", "rip", "--matrix", m, "--order", 7, "--cap", 10) == 1


def test_phase_and_friends(tmp_path, capsys):
    cfg = tmp_path / "cfg.txt"
    cfg.write_text("n = 14\nk = 6, 10\nr = 0, 2\ns = 3\ntrials = 3\nseed = 5\n")
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run("phase", "--config", cfg, "--out", a) == 0
    assert run("phase", "--config", cfg, "--out", b, "--threads", 3) == 0
    assert a.read_bytes() == b.read_bytes()
    full = tmp_path / "full.json"
    assert run("phase", "--config", cfg, "--out", full, "--full") == 0
    assert len(json.loads(full.read_text())["trials"]) == 12
    assert run("compare", "--config", cfg) == 0
    assert capsys.readouterr().out.startswith("n,s,r,target_rate,k_min")
    assert run("verify-bounds", "--config", cfg, "--set", "eta=0,0.01,0.05") == 0


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "partialcs", "bound", "--n", "104", "--s", "5", "--r", "5",
                          "--delta", "0.5"], capture_output=True, text=True)
    assert res.returncode == 0
    assert float(res.stdout) == pytest.approx(2440.745, abs=1e-3)
