from __future__ import annotations

import json
import re

import pytest

from workshop_world.agents import AgentSpec, phase_sequence
from workshop_world.harness import (
    METRICS_HEADER,
    ConfigError,
    RunConfig,
    build_report,
    derive_seed,
    generate_batch,
    load_run,
    report,
    run_evaluation,
    score,
    validate_batch,
)


def make_config(ladder, tmp_path=None, n=3, phases=None, **kw):
    phases = phases or phase_sequence("budgeted", [20, None])
    return RunConfig(ladder=ladder, N=n, base_seed=123, phases=phases, output_dir=tmp_path, **kw)


def test_seed_derivation_is_distinct_and_wraps():
    seeds = {derive_seed(7, lvl, i) for lvl in range(1, 7) for i in range(100)}
    assert len(seeds) == 600
    assert derive_seed(2**64 - 1, 0, 1) == 0


def test_config_validation(ladder):
    with pytest.raises(ConfigError):
        make_config(ladder, n=0)
    with pytest.raises(ConfigError):
        make_config(ladder, phases=[AgentSpec("greedy", "a", 2.0), AgentSpec("greedy", "b", 1.0)])
    with pytest.raises(ConfigError):
        make_config(ladder, tau=0.0)
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"ladder": [[2, 1, 1, 0]], "n": 1, "agent": {"kind": "nope"}})


def test_config_from_dict_variants(ladder):
    cfg = RunConfig.from_dict({
        "ladder": [{"H": 2, "K": 1, "C": 1, "A": 0}, [3, 1, 2, 0]],
        "n": 2,
        "base_seed": "18446744073709551615",
        "agent": {"kind": "budgeted", "schedule": [10, "inf"]},
    })
    assert cfg.phases[1].knob is None and cfg.base_seed == 2**64 - 1
    again = RunConfig.from_dict(json.loads(json.dumps(cfg.to_dict())))
    assert again.to_dict() == cfg.to_dict()


def test_batch_is_cached_and_shared(ladder, tmp_path):
    cfg = make_config(ladder, tmp_path)
    first = generate_batch(cfg)
    files = sorted((tmp_path / "instances").iterdir())
    assert len(files) == 12
    mtimes = [f.stat().st_mtime_ns for f in files]
    second = generate_batch(cfg)
    assert first == second
    assert [f.stat().st_mtime_ns for f in files] == mtimes
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert len({m["seed"] for m in manifest}) == 12


def test_run_evaluation_protocol_and_outputs(ladder, tmp_path):
    cfg = make_config(ladder, tmp_path)
    log = run_evaluation(cfg)
    assert len(log.episodes) == 2 * 4 * 3
    keys = [(e.phase, e.level, e.index) for e in log.episodes]
    assert len(set(keys)) == len(keys)
    ids = [[e.instance_id for e in log.episodes if e.phase == p] for p in (0, 1)]
    assert ids[0] == ids[1]
    csv_lines = (tmp_path / "metrics.csv").read_text().splitlines()
    assert csv_lines[0] == ",".join(METRICS_HEADER)
    assert len(csv_lines) == 1 + 2 * 4
    frontier = json.loads((tmp_path / "frontier.json").read_text())
    assert frontier["pdc_per_phase"][0] <= frontier["pdc_per_phase"][1]
    assert frontier["cdr"] >= 0
    traces = list((tmp_path / "traces").rglob("*.trace.jsonl"))
    assert len(traces) == 24
    runlog = json.loads((tmp_path / "runlog.json").read_text())
    assert runlog["versions"]["workshop_world"]
    assert not re.search(r"\d{4}-\d{2}-\d{2}", json.dumps(runlog))  # no timestamps


def test_score_recomputes_identical_metrics(ladder, tmp_path):
    run_evaluation(make_config(ladder, tmp_path))
    before = (tmp_path / "metrics.csv").read_bytes()
    summary = score(tmp_path)
    assert (tmp_path / "metrics.csv").read_bytes() == before
    assert summary.tau == 0.7
    assert score(tmp_path, tau=0.5).tau == 0.5


def test_parallel_run_matches_serial(ladder, tmp_path):
    run_evaluation(make_config(ladder, tmp_path / "a", n=2))
    run_evaluation(make_config(ladder, tmp_path / "b", n=2, workers=2))
    for name in ("metrics.csv", "frontier.json", "episodes.jsonl"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_report_bundle(ladder, tmp_path):
    run_evaluation(make_config(ladder, tmp_path, tau=0.6))
    bundle = report(tmp_path)
    assert bundle.warnings == []
    assert bundle.frontier["tau_line"] == {"y": 0.6, "style": "dashed"}
    assert len(bundle.frontier["series"]) == 2
    assert "CDR =" in bundle.text and "PDC[t1" in bundle.text
    for name in ("figure1_frontier.json", "figure2_ceiling_novelty.json", "frontier_curves.csv", "summary.txt"):
        assert (tmp_path / "report" / name).exists()


def test_single_phase_report_has_no_cdr(ladder, tmp_path):
    run_evaluation(make_config(ladder, tmp_path, phases=[AgentSpec("greedy")]))
    bundle = report(tmp_path)
    assert bundle.ceiling_novelty["cdr"] is None
    assert "CDR = absent" in bundle.text


def test_partial_run_warns(ladder, tmp_path):
    run_evaluation(make_config(ladder, tmp_path))
    lines = (tmp_path / "episodes.jsonl").read_text().splitlines()
    (tmp_path / "episodes.jsonl").write_text("\n".join(lines[:-3]) + "\n")
    config, summaries = load_run(tmp_path)
    bundle = build_report(config, summaries)
    assert bundle.warnings and "partial" in bundle.warnings[0]
    assert len(bundle.frontier["series"]) == 1


def test_crashing_agent_counts_as_unsolved(ladder, tmp_path):
    spec = AgentSpec("external", command=["python3", "-c", "import sys; sys.exit(3)"], timeout=5)
    log = run_evaluation(make_config(ladder, tmp_path, n=1, phases=[spec]))
    assert all(not e.result.solved for e in log.episodes)
    assert [rec.N for rec in log.phase_results[0].levels] == [1, 1, 1, 1]
    assert log.protocol_errors == 4


def test_validate_batch(ladder):
    rows = validate_batch(make_config(ladder, n=2), cap=4)
    assert len(rows) == 6
    assert all(r["oracle_min_cost"] == r["H"] for r in rows)
