from __future__ import annotations

import json
import sys
from pathlib import Path

import pytest

from workshop_world.cli import apply_overrides, main

CONFIG = {
    "ladder": [[2, 1, 1, 0.0], [3, 1, 2, 0.0]],
    "n": 2,
    "base_seed": 5,
    "agent": {"kind": "budgeted", "schedule": [10, 1000]},
}

SCRIPT = Path(__file__).parent / "fixtures" / "scripted_agent.py"


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps(CONFIG))
    return path


def test_overrides_parse_json_values():
    out = apply_overrides({"agent": {"kind": "greedy"}}, ["agent.kind=beam", "agent.knob=3", "tau=0.5"])
    assert out == {"agent": {"kind": "beam", "knob": 3}, "tau": 0.5}


def test_run_score_report(config_file, tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["run", str(config_file), "-o", str(out)]) == 0
    assert "PDC per phase" in capsys.readouterr().out
    resolved = json.loads((out / "config.resolved.json").read_text())
    assert resolved["n"] == 2
    assert main(["score", str(out)]) == 0
    assert '"pdc_per_phase"' in capsys.readouterr().out
    assert main(["report", str(out)]) == 0
    assert "PDC[t2" in capsys.readouterr().out


def test_toml_config_and_flag_overrides(tmp_path):
    path = tmp_path / "run.toml"
    path.write_text(
        'n = 1\nladder = [[2, 1, 1, 0.0]]\n[agent]\nkind = "greedy"\n'
    )
    out = tmp_path / "out"
    assert main(["run", str(path), "-o", str(out), "--n", "3", "--set", "tau=0.5"]) == 0
    resolved = json.loads((out / "config.resolved.json").read_text())
    assert resolved["n"] == 3 and resolved["tau"] == 0.5


def test_generate_and_validate(config_file, tmp_path, capsys):
    out = tmp_path / "gen"
    assert main(["generate", str(config_file), "-o", str(out)]) == 0
    assert len(list((out / "instances").iterdir())) == 4
    assert main(["validate", str(config_file), "--cap", "6"]) == 0
    rows = [json.loads(x) for x in capsys.readouterr().out.splitlines() if x.startswith("{")]
    assert len(rows) == 4 and all(r["exact_H_match"] for r in rows)


def test_exit_code_config_error(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({**CONFIG, "n": 0}))
    assert main(["run", str(bad), "-o", str(tmp_path / "o")]) == 2
    bad.write_text("{not json")
    assert main(["run", str(bad), "-o", str(tmp_path / "o")]) == 2
    assert main(["run", str(tmp_path / "missing.json"), "-o", str(tmp_path / "o")]) == 2
    assert main(["score", str(tmp_path / "nowhere")]) == 2


def test_exit_code_generation_error(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({**CONFIG, "ladder": [[40, 1, 1, 0.0]]}))
    assert main(["run", str(bad), "-o", str(tmp_path / "o")]) == 3


def test_exit_code_protocol_error(tmp_path):
    cfg = {**CONFIG, "agent": {"kind": "external", "command": [sys.executable, str(SCRIPT), "garbage"]}}
    path = tmp_path / "ext.json"
    path.write_text(json.dumps(cfg))
    out = tmp_path / "o"
    assert main(["run", str(path), "-o", str(out)]) == 4
    assert (out / "metrics.csv").exists()
