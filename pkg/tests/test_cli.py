import json
import subprocess
import sys
from pathlib import Path

import pytest

from increment_lab.cli import SUBCOMMANDS, main

ROOT = Path(__file__).resolve().parents[1]
SMOKE = ROOT / "configs" / "smoke.json"


def test_missing_config_exits_2(tmp_path, capsys):
    missing = tmp_path / "nope.json"
    assert main(["theorem1", "--config", str(missing), "--out", str(tmp_path)]) == 2
    assert str(missing) in capsys.readouterr().err


def test_unknown_subcommand_exits_2(capsys):
    assert main(["theorem9"]) == 2
    assert "invalid choice" in capsys.readouterr().err


def test_bad_seed_and_bad_section(tmp_path, capsys):
    assert main(["theorem3", "--seed", "-1", "--config", str(SMOKE)]) == 2
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"version": 1, "experiments": {"theorem1": {"nn": 3}}}))
    assert main(["theorem1", "--config", str(cfg), "--out", str(tmp_path)]) == 2
    assert "nn" in capsys.readouterr().err


def test_schedule_violation_exits_2(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"version": 1, "experiments": {"theorem2": {"n": [1000]}}}))
    assert main(["theorem2", "--config", str(cfg), "--out", str(tmp_path)]) == 2
    assert "log(1/a_n)/log log n" in capsys.readouterr().err


def test_failed_verdict_exits_1(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"version": 1, "experiments": {"wschebor": {
        "options": {"steps": 2000, "eps": [0.01], "tol": 0.0}}}}))
    assert main(["wschebor", "--config", str(cfg), "--out", str(tmp_path)]) == 1


def test_seed_flag_is_reproducible(tmp_path, capsys):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    for out in (out1, out2):
        assert main(["theorem3", "--config", str(SMOKE), "--seed", "99", "--out", str(out)]) == 0
    a, b = (out / "theorem3.json" for out in (out1, out2))
    assert a.read_bytes() == b.read_bytes()
    assert json.loads(a.read_text())["seed"]["root_seed"] == 99
    assert (out1 / "theorem3.csv").read_bytes() == (out2 / "theorem3.csv").read_bytes()


def test_replicas_override(tmp_path):
    assert main(["variance", "--config", str(SMOKE), "--replicas", "250", "--out",
                 str(tmp_path)]) == 0
    assert json.loads((tmp_path / "variance.json").read_text())["config"]["replicas"] == 250


def test_all_writes_one_report_per_experiment(tmp_path, capsys):
    assert main(["all", "--config", str(SMOKE), "--out", str(tmp_path)]) == 0
    names = [s for s in SUBCOMMANDS if s != "all"]
    assert sorted(p.stem for p in tmp_path.glob("*.json") if ".timing" not in p.name) == sorted(names)
    printed = capsys.readouterr().out
    for name in names:
        assert f"{name}: PASS" in printed


@pytest.mark.parametrize("args", [["--help"], ["theorem1", "--help"]])
def test_help(args):
    assert main(args) == 0


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "increment_lab.cli", "poissonization", "--config",
                           str(SMOKE), "--out", str(tmp_path)], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert "poissonization: PASS" in proc.stdout
