import json
import shutil
import subprocess
from pathlib import Path

import numpy as np
import pytest

from norm_soliton.cli import main
from norm_soliton.grid import field_to_csv, gaussian, make_grid
from norm_soliton.scenario import OUTPUT_ENV, config_hash, load_scenario

SMALL_GRID = ["--override", "grid.n=512"]


def run_cli(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, (json.loads(out) if out else None), (json.loads(err) if err else None)


def test_thresholds_success(tmp_path, capsys):
    code, out, _ = run_cli(capsys, "thresholds", "--output-dir", str(tmp_path), "--mu", "1", "--q", "2.2")
    assert code == 0
    assert out["report"]["regime"]["tag"] == "TH1-two-branch"
    folder = Path(out["output"])
    manifest = json.loads((folder / "manifest.json").read_text())
    assert set(manifest) == {"config_hash", "task", "schema_version", "versions", "timings", "files"}
    assert set(manifest["files"]) == {"report.json", "scenario.json"}
    assert set(manifest["versions"]) == {"python", "numpy", "scipy", "norm_soliton"}


def test_equal_exponents_is_parameter_error(tmp_path, capsys):
    code, _, err = run_cli(capsys, "thresholds", "--output-dir", str(tmp_path), "--q", "4", "--p", "4")
    assert code == 2 and err["error"] == "ParameterError"


def test_regime_error_exit_code(tmp_path, capsys):
    code, _, err = run_cli(capsys, "mountain", "--output-dir", str(tmp_path), *SMALL_GRID,
                           "--override", "params.q=2.5", "--override", "params.a=0.5",
                           "--override", "params.mu=3")
    assert code == 2 and err["error"] == "RegimeError"


def test_solver_failure_exit_code(tmp_path, capsys):
    code, _, err = run_cli(capsys, "mountain", "--output-dir", str(tmp_path), *SMALL_GRID,
                           "--override", "solver.max_iter=1", "--override", "solver.newton=false")
    assert code == 3 and err["error"] in ("SolverError", "StagnationError")


def test_non_finite_init_exit_code(tmp_path, capsys):
    g = make_grid(40.0, 512, "graded", 6.0)
    u = gaussian(g, 1.0)
    text = field_to_csv(u).replace(repr(float(u.values[3])), "nan", 1)
    path = tmp_path / "bad.csv"
    path.write_text(text)
    code, _, err = run_cli(capsys, "fiber", "--output-dir", str(tmp_path), *SMALL_GRID,
                           "--override", f"options.init={path}")
    assert code == 4 and err["error"] == "NumericError"


def test_config_file_and_override(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"task": "ground", "params": {"a": 1.610832885529009, "mu": 3.0},
                               "grid": {"n": 512}}))
    code, out, _ = run_cli(capsys, "ground", "--config", str(cfg), "--output-dir", str(tmp_path),
                           "--override", "options.width=1.5")
    assert code == 0
    rep = out["report"]
    assert rep["kind"] == "local-min" and rep["level"] < 0
    scen = json.loads((Path(out["output"]) / "scenario.json").read_text())
    assert scen["grid"]["n"] == 512 and scen["options"]["width"] == 1.5 and scen["params"]["q"] == 2.2


def test_config_task_mismatch(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"task": "gn"}))
    code, _, _ = run_cli(capsys, "ground", "--config", str(cfg), "--output-dir", str(tmp_path))
    assert code == 2


def test_outputs_are_deterministic(tmp_path, capsys):
    hashes = []
    for sub in ("one", "two"):
        code, out, _ = run_cli(capsys, "fiber", "--output-dir", str(tmp_path / sub), *SMALL_GRID)
        assert code == 0
        files = json.loads((Path(out["output"]) / "manifest.json").read_text())["files"]
        files.pop("scenario.json")  # records the differing output_dir
        hashes.append((Path(out["output"]).name, files))
    assert hashes[0] == hashes[1]


def test_config_hash_ignores_output_dir():
    a = load_scenario("gn")
    b = dict(a, output_dir="/elsewhere")
    assert config_hash(a) == config_hash(b)
    assert config_hash(a) != config_hash(load_scenario("gn", overrides=["options.t=3"]))


def test_output_env(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv(OUTPUT_ENV, str(tmp_path / "env"))
    code, out, _ = run_cli(capsys, "gn", "--t", "3", *SMALL_GRID)
    assert code == 0
    assert Path(out["output"]).parent == tmp_path / "env"
    assert (Path(out["output"]) / "profile.csv").exists()
    assert abs(out["report"]["grid_gn_deviation"]) < 1e-3


def test_evolve_blowup_factor(tmp_path, capsys):
    code, out, _ = run_cli(capsys, "evolve", "--output-dir", str(tmp_path), *SMALL_GRID,
                           "--override", "params.a=1.610832885529009", "--override", "params.mu=3",
                           "--init", "mountain", "--rho", "0.1", "--T", "1", "--dt", "1e-5",
                           "--override", "options.blowup_factor=3", "--override", "options.adaptive=true")
    assert code == 0
    rep = out["report"]
    assert rep["blown_up"] and rep["t_final"] < 1


def test_sweep_small(tmp_path, capsys):
    code, out, _ = run_cli(capsys, "sweep", "--output-dir", str(tmp_path), *SMALL_GRID, "--vary", "mu",
                           "--override", "options.values=[-1.0, 1.0]", "--override", "options.workers=1")
    assert code == 0
    cells = out["report"]["cells"]
    assert [c["regime"] for c in cells] == ["TH5-defocusing", "TH1-two-branch"]
    assert "mountain:ok" in cells[0]["status"]
    text = (Path(out["output"]) / "sweep.csv").read_text().splitlines()
    assert text[0].startswith("a,mu,p,q,regime") and len(text) == 3


def test_bad_override_syntax(tmp_path, capsys):
    code, _, _ = run_cli(capsys, "gn", "--output-dir", str(tmp_path), "--override", "no-equals")
    assert code == 2


@pytest.mark.skipif(shutil.which("norm-soliton") is None, reason="console script not installed")
def test_console_script(tmp_path):
    proc = subprocess.run(["norm-soliton", "thresholds", "--output-dir", str(tmp_path)],
                          capture_output=True, text=True, timeout=120)
    assert proc.returncode == 0
    assert np.isfinite(json.loads(proc.stdout)["report"]["thresholds"]["a0"])
