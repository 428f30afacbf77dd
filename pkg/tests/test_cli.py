import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from holoproj.cli import (EXIT_CHECK, EXIT_INPUT, EXIT_OK, ConfigError, RunConfig, execute, main,
                          parse_matrix)


def write(tmp_path, cfg, name="run.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return str(p)


SIGMA_Z = [[1, 0], [0, -1]]


def test_parse_matrix():
    M = parse_matrix([[1, [0, 2]], [[0, -2], 3.5]], "m")
    assert np.array_equal(M, [[1, 2j], [-2j, 3.5]])
    with pytest.raises(ConfigError, match=r"m\[1\]: row has 1 entries"):
        parse_matrix([[1, 0], [1]], "m")
    with pytest.raises(ConfigError, match=r"m\[0\]\[1\]"):
        parse_matrix([[1, "x"], [0, 1]], "m")
    with pytest.raises(ConfigError, match="non-finite"):
        parse_matrix([[1, float("inf")], [0, 1]], "m")


def test_verify_hermitian_passes(tmp_path, capsys):
    out = tmp_path / "v.json"
    code = main(["--config", write(tmp_path, {"command": "verify", "hamiltonian": {"H": SIGMA_Z}}), "--out", str(out)])
    assert code == EXIT_OK
    doc = json.loads(out.read_text())
    names = {r["identity_name"]: r for r in doc["reports"]}
    assert names["killing"]["passed"] and doc["passed"]
    assert "[PASS] killing" in capsys.readouterr().out


def test_check_failure_exit_code(tmp_path):
    cfg = write(tmp_path, {"command": "verify", "hamiltonian": SIGMA_Z})
    assert main(["--config", cfg, "--tol", "killing=1e-30", "--out", str(tmp_path / "o.json")]) == EXIT_CHECK


@pytest.mark.parametrize("cfg, msg", [
    ({"command": "verify", "hamiltonian": [[1, 0], [0]]}, "hamiltonian[1]"),
    ({"command": "verify", "hamiltonian": [[1, 0], [0, "nan"]]}, "hamiltonian[1][1]"),
    ({"command": "dance"}, "command"),
    ({"command": "verify", "hamiltonian": SIGMA_Z, "n": 3}, "n:"),
    ({"command": "verify", "hamiltonian": SIGMA_Z, "tolerances": {"killing": -1}}, "tolerances.killing"),
    ({"command": "evolve", "hamiltonian": SIGMA_Z, "psi0": [0, 0]}, "psi0"),
])
def test_input_errors(tmp_path, capsys, cfg, msg):
    assert main(["--config", write(tmp_path, cfg), "--out", str(tmp_path / "o.json")]) == EXIT_INPUT
    assert msg in capsys.readouterr().err


def test_bad_json(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text('{"command": "verify",\n  "hamiltonian": [[1, 0]')
    assert main(["--config", str(p)]) == EXIT_INPUT
    assert "line" in capsys.readouterr().err


def test_pt_scan_csv(tmp_path, monkeypatch):
    monkeypatch.setenv("HOLOPROJ_OUT_DIR", str(tmp_path / "outdir"))
    cfg = {"command": "pt-scan", "hamiltonian": {"family": "pt2", "grid": {"start": 0, "stop": 2, "num": 101}}}
    assert main(["--config", write(tmp_path, cfg), "--format", "csv"]) == EXIT_OK
    rows = list(csv.DictReader((tmp_path / "outdir" / "pt-scan.csv").open()))
    assert len(rows) == 101
    regimes = [r["regime"] for r in rows]
    flip = next(i for i, r in enumerate(regimes) if r != "unitary_like")
    assert float(rows[flip]["theta"]) == pytest.approx(1.0, abs=0.03)


def test_pt_scan_polynomial_json(tmp_path):
    cfg = {"command": "pt-scan", "hamiltonian": {"family": "polynomial", "coefficients": [
        [[0, 1], [1, 0]], [[[0, 1], 0], [0, [0, -1]]]], "grid": [0.0, 0.5, 1.5]}}
    out = tmp_path / "scan.json"
    assert main(["--config", write(tmp_path, cfg), "--out", str(out)]) == EXIT_OK
    doc = json.loads(out.read_text())
    assert [r["regime"] for r in doc["extras"]["scan"]["records"]] == ["unitary_like", "unitary_like", "broken"]
    assert doc["extras"]["exceptional_estimates"][0] == pytest.approx(1.0, abs=1e-5)


def test_evolve_zero_generator_constant(tmp_path):
    cfg = {"command": "evolve", "hamiltonian": [[0, 0], [0, 0]], "psi0": [1, [0, 1]], "t_final": 1, "dt": 0.25}
    out = tmp_path / "traj.csv"
    assert main(["--config", write(tmp_path, cfg), "--format", "csv", "--out", str(out)]) == EXIT_OK
    rows = list(csv.reader(out.open()))
    assert rows[0] == ["t", "chart", "re_z1", "im_z1", "H", "Gamma", "norm"]
    assert len({tuple(r[1:]) for r in rows[1:]}) == 1 and len(rows) == 6


@pytest.mark.parametrize("command, extra", [
    ("evolve", {"hamiltonian": [[[0.2, 0.1], 1], [1, [-0.3, -0.4]]], "t_final": 1.0}),
    ("geodesic", {"n": 3, "alpha": 0.4, "beta": -1.0}),
    ("fixed-points", {"hamiltonian": [[1, [0, 1], 0], [0.5, 2, 0], [0, 0.3, [-1, 1]]]}),
    ("embed", {"n": 3, "count": 5}),
    ("verify", {"hamiltonian": [[1, [0, 0.5]], [[0, -0.5], [0, -1]]], "points": 2}),
])
def test_commands_deterministic_and_round_trip(tmp_path, command, extra):
    cfg = dict(command=command, seed=7, **extra)
    outs = []
    for i in range(2):
        out = tmp_path / f"{command}{i}.json"
        assert main(["--config", write(tmp_path, cfg), "--out", str(out)]) == EXIT_OK
        outs.append(out.read_text())
    assert outs[0] == outs[1]
    doc = json.loads(outs[0])
    assert json.loads(json.dumps(doc)) == doc
    assert doc["command"] == command


def test_seed_changes_output(tmp_path):
    base = {"command": "embed", "n": 2, "count": 3}
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    main(["--config", write(tmp_path, base), "--out", str(a), "--seed", "1"])
    main(["--config", write(tmp_path, base), "--out", str(b), "--seed", "2"])
    assert a.read_text() != b.read_text()


def test_config_round_trip():
    d = {"command": "verify", "hamiltonian": SIGMA_Z, "seed": 3, "points": 4, "format": "json",
         "tolerances": {}, "fd_step": None, "n": None, "output_path": None}
    assert RunConfig.from_dict(d).to_dict() == d


def test_execute_without_files():
    out = execute(RunConfig(command="fixed-points", hamiltonian=SIGMA_Z))
    assert out.passed and len(out.rows) == 2


def test_module_entry_point(tmp_path):
    cfg = write(tmp_path, {"command": "embed", "n": 2, "count": 2})
    r = subprocess.run([sys.executable, "-m", "holoproj", "--config", cfg, "--out", str(tmp_path / "e.csv"),
                        "--format", "csv"], capture_output=True, text=True)
    assert r.returncode == 0, r.stderr
    assert (tmp_path / "e.csv").read_text().startswith("x0,x1,x01,y01")
