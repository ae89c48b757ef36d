import csv
import json

import pytest

from greenedge.cli import main
from greenedge.storage import load_instance


@pytest.fixture
def instance_dir(tmp_path):
    out = tmp_path / "inst"
    assert main(["generate", "--N", "400", "--T", "120", "--rho", "0.2", "--beta", "500", "--out", str(out)]) == 0
    return out


def test_generate(instance_dir):
    inst = load_instance(instance_dir)
    assert len(inst.tasks) == 400 and inst.T_total == 120 and inst.config.beta_max == 500


@pytest.mark.parametrize("scheduler", ["snb", "sib", "sfb", "offline"])
def test_schedule(instance_dir, tmp_path, scheduler, capsys):
    out = tmp_path / scheduler
    assert main(["schedule", str(instance_dir), "--scheduler", scheduler, "--out", str(out)]) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["accepted"] and summary["scheduler"] == scheduler
    assert "ACCEPTED" in capsys.readouterr().out
    # the written schedule passes the checker
    assert main(["schedule", str(instance_dir), "--check", str(out / "schedule.jsonl")]) == 0
    slots = list(csv.DictReader(open(out / "slots.csv")))
    assert len(slots) == 120


def test_check_rejects_tampered(instance_dir, tmp_path, capsys):
    bad = tmp_path / "bad.jsonl"
    bad.write_text('{"task_id": 1, "slot": 1}\n{"task_id": 1, "slot": 2}\n')
    assert main(["schedule", str(instance_dir), "--check", str(bad)]) == 1
    assert "REJECTED" in capsys.readouterr().out


def test_maxflow_refuses_general_instance(instance_dir, capsys):
    assert main(["schedule", str(instance_dir), "--scheduler", "maxflow"]) == 2
    assert "error" in capsys.readouterr().err


def test_baseline_and_beta_override(instance_dir, tmp_path):
    out = tmp_path / "b"
    assert main(["baseline", str(instance_dir), "--policy", "npedf", "--beta", "inf", "--out", str(out)]) == 0
    assert json.loads((out / "summary.json").read_text())["scheduler"] == "baseline:npedf"


def test_simulate(instance_dir, tmp_path, capsys):
    out = tmp_path / "sim"
    assert main(["simulate", str(instance_dir), "--P-d", "10", "--T-d", "10", "--spike-rate", "5",
                 "--out", str(out)]) == 0
    assert "revenue%" in capsys.readouterr().out
    assert len(list(csv.DictReader(open(out / "trace.csv")))) == 120


def test_sweep_and_report(tmp_path, monkeypatch):
    cfg = tmp_path / "exp.yaml"
    cfg.write_text("N: 200\nT_total: 60\nrhos: [0.1, 0.2]\nbeta_max: [0, inf]\n"
                   "schedulers: [offline, 'baseline:ea']\n")
    monkeypatch.setenv("GREENEDGE_OUTPUT_DIR", str(tmp_path / "env"))
    assert main(["sweep", "--config", str(cfg), "--seeds", "0", "1"]) == 0
    runs = tmp_path / "env" / "runs.csv"
    assert len(list(csv.DictReader(open(runs)))) == 2 * 2 * 2 * 2
    assert (tmp_path / "env" / "battery.svg").exists()
    assert main(["report", str(runs), "--out", str(tmp_path / "redraw")]) == 0
    assert (tmp_path / "redraw" / "rho.svg").exists()


def test_sweep_flag_overrides(tmp_path):
    out = tmp_path / "o"
    assert main(["sweep", "--N", "100", "--rho", "0.2", "--beta", "0", "--scheduler", "online",
                 "--deviation", "5,5", "10,10", "--format", "csv", "--out", str(out)]) == 0
    rows = list(csv.DictReader(open(out / "runs.csv")))
    assert [(r["P_d"], r["T_d"]) for r in rows] == [("5.0", "5.0"), ("10.0", "10.0")]


def test_sweep_config_error(tmp_path, capsys):
    assert main(["sweep", "--scheduler", "nope", "--out", str(tmp_path)]) == 2
    assert "schedulers[0]" in capsys.readouterr().err
