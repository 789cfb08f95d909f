import json
import os
import subprocess
import sys

import pytest

from hallcond.cli import main
from hallcond.config import RunConfig, load_config, parse_config
from hallcond.errors import ConfigError

CLUSTER_CFG = """
[model]
kind = interacting_cluster
t = 1.0
v = 0.6
mu = 0.4
rng_seed = 0

[lattice]
l1 = 2
l2 = 3
n_orb = 1

[experiment]
kind = verify-algebra
engine = many_body
"""


def test_parse_and_roundtrip():
    cfg = parse_config(CLUSTER_CFG)
    text = cfg.to_ini()
    cfg2 = parse_config(text)
    assert cfg.to_dict() == cfg2.to_dict()
    assert cfg.config_hash() == cfg2.config_hash()


def test_unknown_key_rejected():
    with pytest.raises(ConfigError) as err:
        parse_config(CLUSTER_CFG + "\nnot_a_key = 1\n")
    assert "not_a_key" in str(err.value)
    with pytest.raises(ConfigError) as err:
        parse_config("[nonsense]\nx = 1\n")
    assert "nonsense" in str(err.value)


def test_bad_value_names_key_and_line():
    bad = "[model]\nkind = qwz\nu = not_a_number\n"
    with pytest.raises(ConfigError) as err:
        parse_config(bad)
    msg = str(err.value)
    assert "u" in msg and "line 3" in msg


def test_defaults_filled():
    cfg = parse_config("[experiment]\nkind = weight\n")
    assert cfg.sections["model"]["kind"] == "qwz"
    assert cfg.tolerances["quantization"] == 1e-3


def test_unknown_experiment():
    with pytest.raises(ConfigError):
        parse_config("[experiment]\nkind = dance\n")


def test_cli_verify_algebra(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(CLUSTER_CFG)
    out = tmp_path / "out"
    code = main(["verify-algebra", "--config", str(cfg), "--out", str(out)])
    assert code == 0
    report = json.loads((out / "report.json").read_text())
    assert report["passed"] is True
    assert report["experiment"] == "verify-algebra"
    assert "config_hash" in report["provenance"]
    assert os.path.exists(out / "run_meta.json")


def test_cli_deterministic_reports(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(CLUSTER_CFG)
    out1, out2 = tmp_path / "o1", tmp_path / "o2"
    assert main(["verify-algebra", "--config", str(cfg), "--out", str(out1)]) == 0
    assert main(["verify-algebra", "--config", str(cfg), "--out", str(out2)]) == 0
    assert (out1 / "report.json").read_bytes() == (out2 / "report.json").read_bytes()


def test_cli_exit_2_on_bad_config(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("[model]\nkind = qwz\nwrong = 1\n")
    code = main(["conductance", "--config", str(cfg)])
    assert code == 2
    assert "wrong" in capsys.readouterr().err


def test_cli_exit_2_on_torus_conductance(tmp_path, capsys):
    cfg = tmp_path / "torus.cfg"
    cfg.write_text("[lattice]\nboundary = torus\nl1 = 4\nl2 = 4\nn_orb = 2\n"
                   "origin = 0 0\n")
    code = main(["conductance", "--config", str(cfg)])
    assert code == 2
    assert "Geometry" in capsys.readouterr().err


def test_cli_exit_1_on_failed_tolerance(tmp_path):
    cfg = tmp_path / "tight.cfg"
    cfg.write_text("""
[model]
kind = qwz
u = 1.0

[lattice]
l1 = 10
l2 = 10
n_orb = 2

[experiment]
kind = conductance
engine = free
chern_grid = 16

[tolerances]
quantization = 1e-15
""")
    out = tmp_path / "out"
    code = main(["conductance", "--config", str(cfg), "--out", str(out)])
    assert code == 1
    report = json.loads((out / "report.json").read_text())
    assert report["passed"] is False


def test_cli_csv_series(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("""
[model]
kind = qwz
u = 1.0

[lattice]
l1 = 16
l2 = 16
n_orb = 2

[experiment]
kind = conductance
engine = free
chern_grid = 16

[tolerances]
quantization = 5e-1
""")
    out = tmp_path / "out"
    code = main(["conductance", "--config", str(cfg), "--out", str(out)])
    assert code == 0
    lines = (out / "convergence.csv").read_text().splitlines()
    assert lines[0] == "radius,value,increment"
    assert len(lines) > 2


def test_cli_mb_conductance(tmp_path):
    cfg = tmp_path / "mb.cfg"
    cfg.write_text("""
[model]
kind = interacting_cluster
t = 1.0
v = 0.0
mu = 0.45

[lattice]
l1 = 3
l2 = 3
n_orb = 1

[experiment]
kind = conductance
engine = many_body
""")
    out = tmp_path / "out"
    code = main(["conductance", "--config", str(cfg), "--out", str(out)])
    assert code == 0
    report = json.loads((out / "report.json").read_text())
    assert report["results"]["resummation_residual"] <= 1e-9


def test_cli_seed_override(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(CLUSTER_CFG)
    out = tmp_path / "out"
    code = main(["verify-algebra", "--config", str(cfg), "--out", str(out),
                 "--seed", "7"])
    assert code == 0
    report = json.loads((out / "report.json").read_text())
    assert report["config"]["model"]["rng_seed"] == 7


def test_console_entry_point(tmp_path):
    cfg = tmp_path / "w.cfg"
    cfg.write_text("[model]\nkind = qwz\nu = 3.0\n\n[experiment]\nkind = weight\n")
    proc = subprocess.run([sys.executable, "-m", "hallcond.cli", "weight",
                           "--config", str(cfg)],
                          capture_output=True, text=True, timeout=300)
    assert proc.returncode == 0, proc.stderr
    assert "PASS" in proc.stdout
