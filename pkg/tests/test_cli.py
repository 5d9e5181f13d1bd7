import argparse
import csv
import json

import numpy as np
import pytest

from sdl.cli import ExperimentConfig, build_config, main, read_config_file
from sdl.errors import ConfigurationError


def _run(tmp_path, name, *extra):
    out = tmp_path / name
    code = main(["run", "--out", str(out), *extra])
    return code, out


def test_hopf_run_artifacts(tmp_path):
    code, out = _run(tmp_path, "hopf", "--experiment", "hopf", "--resolution", "16")
    assert code == 0
    rec = json.loads((out / "results.json").read_text())
    assert set(rec) == {"experiment", "discretization", "results", "checks"}
    assert all(rec["checks"].values())
    man = json.loads((out / "manifest.json").read_text())
    assert man["config"]["resolution"] == 16 and "numpy" in man["versions"]


def test_results_are_deterministic(tmp_path):
    args = ("--experiment", "energy", "--resolution", "16", "--alpha", "0.5")
    _, a = _run(tmp_path, "a", *args)
    _, b = _run(tmp_path, "b", *args)
    assert (a / "results.json").read_bytes() == (b / "results.json").read_bytes()


def test_flow_run_writes_trajectory(tmp_path):
    code, out = _run(tmp_path, "flow", "--experiment", "flow", "--resolution", "16", "--steps", "5")
    assert code in (0, 1)
    rows = list(csv.DictReader(open(out / "trajectory.csv")))
    tot = np.array([float(r["total"]) for r in rows])
    assert np.all(np.diff(tot) <= 1e-12 * np.abs(tot[:-1]))


def test_homogeneous_run(tmp_path):
    code, out = _run(tmp_path, "lie", "--experiment", "homogeneous", "--n", "4",
                     "--pi0", "a1", "--pi0p", "a1,a3")
    assert code == 0
    res = json.loads((out / "results.json").read_text())["results"]
    assert res["dim_m0"] == 10


@pytest.mark.parametrize("argv", [
    ["run", "--experiment", "bogus"],
    ["run", "--resolution", "7"],
    ["run", "--t", "1.5"],
    ["nothing"],
])
def test_configuration_exit_code(tmp_path, argv):
    assert main(argv + ["--out", str(tmp_path)] if argv[0] == "run" else argv) == 2


def test_unsupported_target_exit_code(tmp_path):
    code, _ = _run(tmp_path, "bad", "--experiment", "homogeneous", "--n", "4", "--pi0p", "a1")
    assert code == 2


def _ns(**kw):
    base = {f: None for f in vars(ExperimentConfig())}
    base.update(config=None)
    base.update(kw)
    return argparse.Namespace(**base)


def test_config_precedence(tmp_path):
    p = tmp_path / "exp.cfg"
    p.write_text("# comment\nresolution = 20\nseed = 7  # trailing\nalpha-grid = 0:1:0.5\n")
    assert read_config_file(p)["alpha_grid"] == "0:1:0.5"
    cfg = build_config(_ns(config=str(p), seed=3))
    assert cfg.resolution == 20 and cfg.seed == 3
    assert list(cfg.alphas()) == pytest.approx([0.0, 0.5, 1.0])
    assert build_config(_ns()).resolution == ExperimentConfig().resolution


def test_config_errors(tmp_path):
    p = tmp_path / "bad.cfg"
    p.write_text("resolution 20\n")
    with pytest.raises(ConfigurationError):
        build_config(_ns(config=str(p)))
    p.write_text("colour = red\n")
    with pytest.raises(ConfigurationError):
        build_config(_ns(config=str(p)))
    with pytest.raises(ConfigurationError):
        build_config(_ns(config=str(tmp_path / "missing.cfg")))
