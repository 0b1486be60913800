"""Phased evaluation protocol: instance batches, episodes, metrics and reports.

Run directory layout::

    config.resolved.json       the configuration actually used
    manifest.json              one entry per instance (level, seed, id, oracle cost)
    instances/{level}_{seed}.instance.json
    episodes.jsonl             one summary record per (phase, level, index)
    traces/{phase}/{level}_{seed}.trace.jsonl
    metrics.csv                one row per (phase, level)
    frontier.json              FrontierSummary
    runlog.json                config, tool versions, phase results and summary
    report/                    written by ``report``

Instance seeds are ``(base_seed + level * 2**32 + index) mod 2**64``, which are
pairwise distinct for index < 2**32.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import platform
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .agents import AgentConfigError, AgentSpec, make_agent, phase_sequence
from .core import ContractViolation, DifficultyLadder, DifficultyVector, Instance
from .genesis import GeneratorConfig, GenerationConfigError, generate_instance, validate_instance
from .metrics import (
    DEFAULT_TAU,
    EpisodeRecord,
    FrontierSummary,
    LevelRecords,
    PhaseResult,
    Signature,
    frontier_curves,
)
from .schema import dumps, dumps_instance, loads_instance, trace_lines
from .sim import EpisodeResult, run_interactive

logger = logging.getLogger(__name__)

METRICS_HEADER = ["phase_time", "level", "N", "successes", "success_rate", "efficiency", "mean_novelty"]


class ConfigError(ValueError):
    pass


class AgentLaunchError(RuntimeError):
    pass


def derive_seed(base_seed: int, level: int, index: int) -> int:
    return (int(base_seed) + int(level) * 2**32 + int(index)) % 2**64


@dataclass
class RunConfig:
    ladder: DifficultyLadder
    N: int
    base_seed: int
    phases: list
    generator: GeneratorConfig = field(default_factory=GeneratorConfig)
    tau: float = DEFAULT_TAU
    workers: int = 1
    output_dir: Optional[Path] = None
    verify_cap: int = 0
    module_weight: float = 0.5
    drift_slope: bool = False
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.N < 1:
            raise ConfigError("N must be >= 1")
        if not 0 <= int(self.base_seed) < 2**64:
            raise ConfigError("base_seed must be an unsigned 64-bit integer")
        if not self.phases:
            raise ConfigError("at least one phase is required")
        times = [p.phase_time for p in self.phases]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ConfigError(f"phase times must be strictly increasing, got {times}")
        if not 0.0 < self.tau <= 1.0:
            raise ConfigError("tau must lie in (0, 1]")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.output_dir is not None:
            self.output_dir = Path(self.output_dir)

    def to_dict(self) -> dict:
        return {
            "ladder": [dict(H=d.H, K=d.K, C=d.C, A=d.A) for d in self.ladder.levels],
            "n": self.N,
            "base_seed": str(self.base_seed),
            "phases": [p.to_dict() for p in self.phases],
            "generator": self.generator.to_dict(),
            "tau": self.tau,
            "workers": self.workers,
            "output_dir": None if self.output_dir is None else str(self.output_dir),
            "verify_cap": self.verify_cap,
            "module_weight": self.module_weight,
            "drift_slope": self.drift_slope,
            "metadata": self.metadata,
        }

    @classmethod
    def from_dict(cls, data: dict) -> RunConfig:
        try:
            ladder = DifficultyLadder(tuple(_difficulty(row) for row in data["ladder"]))
            if "phases" in data:
                phases = [AgentSpec.from_dict({**p, "knob": _knob(p.get("knob"))}) for p in data["phases"]]
            else:
                agent = dict(data["agent"])
                schedule = [_knob(v) for v in agent.get("schedule", [None])]
                phases = phase_sequence(
                    agent["kind"], schedule, seed=int(agent.get("seed", 0)),
                    command=agent.get("command", ()), timeout=float(agent.get("timeout", 30.0)),
                )
            gen = dict(data.get("generator", {}))
            return cls(
                ladder=ladder,
                N=int(data.get("n", data.get("N", 0))),
                base_seed=int(data.get("base_seed", 0)),
                phases=phases,
                generator=GeneratorConfig(**gen),
                tau=float(data.get("tau", DEFAULT_TAU)),
                workers=int(data.get("workers", 1)),
                output_dir=data.get("output_dir"),
                verify_cap=int(data.get("verify_cap", 0)),
                module_weight=float(data.get("module_weight", 0.5)),
                drift_slope=bool(data.get("drift_slope", False)),
                metadata=dict(data.get("metadata", {})),
            )
        except (KeyError, TypeError, ValueError, ContractViolation, AgentConfigError) as exc:
            if isinstance(exc, (ConfigError, GenerationConfigError)):
                raise
            raise ConfigError(f"invalid run configuration: {exc}") from exc


def _difficulty(row) -> DifficultyVector:
    if isinstance(row, dict):
        return DifficultyVector(int(row["H"]), int(row["K"]), int(row["C"]), float(row["A"]))
    H, K, C, A = row
    return DifficultyVector(int(H), int(K), int(C), float(A))


def _knob(value):
    if value is None or (isinstance(value, str) and value.lower() in ("inf", "unlimited", "none")):
        return None
    return int(value)


def load_config(path) -> dict:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    try:
        if path.suffix == ".toml":
            if sys.version_info >= (3, 11):
                import tomllib
            else:
                import tomli as tomllib
            return tomllib.loads(text)
        return json.loads(text)
    except ValueError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc


def tool_versions() -> dict:
    return {
        "workshop_world": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
    }


# Instances -----------------------------------------------------------------


def instance_path(root: Path, level: int, seed: int) -> Path:
    return Path(root) / "instances" / f"{level}_{seed}.instance.json"


def generate_batch(config: RunConfig, out_dir: Optional[Path] = None) -> dict:
    """Generate (or load from the on-disk cache) the fixed instance batch.

    Returns ``{(level, index): Instance}``. Every phase replays this batch.
    """
    out_dir = out_dir if out_dir is not None else config.output_dir
    batch = {}
    manifest = []
    for level in range(1, len(config.ladder) + 1):
        for index in range(config.N):
            seed = derive_seed(config.base_seed, level, index)
            path = instance_path(out_dir, level, seed) if out_dir is not None else None
            if path is not None and path.exists():
                inst = loads_instance(path.read_text(encoding="utf-8"))
                if inst.seed != seed or inst.difficulty != config.ladder[level]:
                    raise ConfigError(f"cached instance {path} does not match the configuration")
            else:
                inst = generate_instance(seed, level, config.ladder, config.generator)
                if path is not None:
                    path.parent.mkdir(parents=True, exist_ok=True)
                    path.write_text(dumps_instance(inst), encoding="utf-8")
            batch[(level, index)] = inst
            entry = {"level": level, "index": index, "seed": str(seed), "instance_id": inst.instance_id,
                     "oracle_min_cost": None}
            if config.verify_cap and inst.difficulty.H <= config.verify_cap:
                entry["oracle_min_cost"] = validate_instance(inst, config.verify_cap).oracle_min_cost
            manifest.append(entry)
    if out_dir is not None:
        Path(out_dir).mkdir(parents=True, exist_ok=True)
        (Path(out_dir) / "manifest.json").write_text(dumps(manifest), encoding="utf-8")
    seeds = [inst.seed for inst in batch.values()]
    if len(set(seeds)) != len(seeds):
        raise ConfigError("instance seeds collide; reduce N")
    return batch


# Episodes ------------------------------------------------------------------


@dataclass
class EpisodeOutcome:
    phase: int
    level: int
    index: int
    seed: int
    instance_id: str
    result: EpisodeResult
    protocol_errors: int = 0

    def summary(self, phase_label: str) -> dict:
        out = {
            "phase": self.phase,
            "phase_label": phase_label,
            "level": self.level,
            "index": self.index,
            "seed": str(self.seed),
            "instance_id": self.instance_id,
            "protocol_errors": self.protocol_errors,
        }
        out.update(self.result.to_dict())
        return out


def run_episode(instance: Instance, spec: AgentSpec) -> tuple[EpisodeResult, int]:
    """One attempt by a freshly constructed agent. Returns (result, protocol errors)."""
    agent = make_agent(spec)
    try:
        agent.start(instance.seed)
    except AgentConfigError as exc:
        raise AgentLaunchError(str(exc)) from exc
    try:
        result = run_interactive(instance, agent)
    finally:
        agent.close()
    return result, getattr(agent, "protocol_errors", 0)


def _episode_task(args):
    phase, level, index, instance, spec = args
    result, errors = run_episode(instance, spec)
    return EpisodeOutcome(phase, level, index, instance.seed, instance.instance_id, result, errors)


@dataclass
class RunLog:
    config: RunConfig
    versions: dict
    episodes: list
    phase_results: list
    summary: FrontierSummary
    instances: dict = field(default_factory=dict, repr=False)

    @property
    def protocol_errors(self) -> int:
        return sum(e.protocol_errors for e in self.episodes)

    def metrics_csv(self) -> str:
        return metrics_csv(self.phase_results, self.summary)

    def to_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "versions": self.versions,
            "phase_results": [phase_result_to_dict(p) for p in self.phase_results],
            "summary": self.summary.to_dict(),
            "episode_count": len(self.episodes),
            "protocol_errors": self.protocol_errors,
        }


def phase_result_to_dict(phase: PhaseResult) -> dict:
    return {
        "phase_time": phase.phase_time,
        "label": phase.label,
        "levels": [
            {
                "level": rec.level,
                "N": rec.N,
                "successes": rec.successes,
                "steps": [e.steps for e in rec.episodes],
                "budgets": [e.budget for e in rec.episodes],
                "solved": [e.solved for e in rec.episodes],
                "signatures": [
                    None if e.signature is None else {"modules": list(e.signature.modules),
                                                      "skeleton": e.signature.skeleton}
                    for e in rec.episodes
                ],
            }
            for rec in phase.levels
        ],
    }


def build_phase_results(config: RunConfig, summaries: list) -> list:
    """Group per-episode summary dicts into PhaseResults in (phase, level, index) order."""
    by_key = {(s["phase"], s["level"], s["index"]): s for s in summaries}
    phases = []
    for p, spec in enumerate(config.phases):
        levels = []
        for level in range(1, len(config.ladder) + 1):
            rec = LevelRecords(level)
            for index in range(config.N):
                s = by_key.get((p, level, index))
                if s is None:
                    continue
                sig = Signature(tuple(s["modules"]), s["skeleton"]) if s["solved"] else None
                rec.episodes.append(EpisodeRecord(s["solved"], s["steps_used"], s["budget"], sig))
            levels.append(rec)
        phases.append(PhaseResult(spec.phase_time, spec.phase_label, levels))
    return phases


def run_evaluation(config: RunConfig) -> RunLog:
    """Generate the batch once, run one attempt per (phase, instance), score and persist."""
    out = config.output_dir
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        (out / "config.resolved.json").write_text(dumps(config.to_dict()), encoding="utf-8")
    batch = generate_batch(config)
    tasks = [
        (p, level, index, batch[(level, index)], spec)
        for p, spec in enumerate(config.phases)
        for level in range(1, len(config.ladder) + 1)
        for index in range(config.N)
    ]
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            episodes = list(pool.map(_episode_task, tasks, chunksize=4))
    else:
        episodes = [_episode_task(t) for t in tasks]
    summaries = [e.summary(config.phases[e.phase].phase_label) for e in episodes]
    phase_results = build_phase_results(config, summaries)
    summary = frontier_curves(phase_results, config.tau, config.module_weight, config.drift_slope)
    log = RunLog(config, tool_versions(), episodes, phase_results, summary, batch)
    if log.protocol_errors:
        logger.warning("%d agent protocol errors; affected attempts count as unsolved", log.protocol_errors)
    if out is not None:
        persist(log, out)
    return log


def metrics_csv(phase_results: list, summary: FrontierSummary) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(METRICS_HEADER)
    for p, phase in enumerate(phase_results):
        for li, rec in enumerate(phase.levels):
            eff = summary.efficiency[p][li]
            nov = summary.level_novelty[p][li]
            writer.writerow([
                repr(float(phase.phase_time)), rec.level, rec.N, rec.successes,
                repr(summary.curves[p][li]),
                "" if eff is None else repr(eff),
                "" if nov is None else repr(nov),
            ])
    return buf.getvalue()


def persist(log: RunLog, out: Path) -> None:
    out = Path(out)
    with open(out / "episodes.jsonl", "w", encoding="utf-8") as fh:
        for e in log.episodes:
            fh.write(json.dumps(e.summary(log.config.phases[e.phase].phase_label), sort_keys=True) + "\n")
    for e in log.episodes:
        label = log.config.phases[e.phase].phase_label
        path = out / "traces" / label / f"{e.level}_{e.seed}.trace.jsonl"
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text("\n".join(trace_lines(e.instance_id, e.result)) + "\n", encoding="utf-8")
    write_scores(out, log.phase_results, log.summary)
    (out / "runlog.json").write_text(dumps(log.to_dict()), encoding="utf-8")


def write_scores(out: Path, phase_results: list, summary: FrontierSummary) -> None:
    (Path(out) / "metrics.csv").write_text(metrics_csv(phase_results, summary), encoding="utf-8")
    (Path(out) / "frontier.json").write_text(dumps(summary.to_dict()), encoding="utf-8")


def load_run(run_dir) -> tuple[RunConfig, list]:
    run_dir = Path(run_dir)
    cfg_path = run_dir / "config.resolved.json"
    if not cfg_path.exists():
        raise ConfigError(f"{run_dir} has no config.resolved.json")
    config = RunConfig.from_dict(json.loads(cfg_path.read_text(encoding="utf-8")))
    episodes_path = run_dir / "episodes.jsonl"
    summaries = []
    if episodes_path.exists():
        summaries = [json.loads(line) for line in episodes_path.read_text(encoding="utf-8").splitlines() if line]
    return config, summaries


def score(run_dir, tau: Optional[float] = None) -> FrontierSummary:
    """Recompute metrics from a run directory's episode records."""
    config, summaries = load_run(run_dir)
    phase_results = build_phase_results(config, summaries)
    summary = frontier_curves(phase_results, config.tau if tau is None else tau,
                              config.module_weight, config.drift_slope)
    write_scores(Path(run_dir), phase_results, summary)
    return summary


def missing_episodes(config: RunConfig, summaries: list) -> list:
    have = {(s["phase"], s["level"], s["index"]) for s in summaries}
    return [
        (p, level, index)
        for p in range(len(config.phases))
        for level in range(1, len(config.ladder) + 1)
        for index in range(config.N)
        if (p, level, index) not in have
    ]


@dataclass
class ReportBundle:
    frontier: dict
    ceiling_novelty: dict
    text: str
    warnings: list


def build_report(config: RunConfig, summaries: list) -> ReportBundle:
    warnings = []
    missing = missing_episodes(config, summaries)
    if missing:
        warnings.append(f"partial report: {len(missing)} of "
                        f"{len(config.phases) * len(config.ladder) * config.N} episodes missing")
    phase_results = build_phase_results(config, summaries)
    if any(rec.N == 0 for p in phase_results for rec in p.levels):
        keep = [p for p in phase_results if all(rec.N > 0 for rec in p.levels)]
        if not keep:
            return ReportBundle({}, {}, "\n".join(warnings) + "\n", warnings)
        phase_results = keep
    summary = frontier_curves(phase_results, config.tau, config.module_weight, config.drift_slope)
    frontier = {
        "levels": summary.levels,
        "difficulty": [dict(H=d.H, K=d.K, C=d.C, A=d.A) for d in config.ladder.levels],
        "tau_line": {"y": summary.tau, "style": "dashed"},
        "series": [
            {"phase_label": label, "phase_time": t, "success_rate": curve}
            for label, t, curve in zip(summary.phase_labels, summary.phase_times, summary.curves)
        ],
    }
    ceiling = {
        "phase_times": summary.phase_times,
        "phase_labels": summary.phase_labels,
        "pdc": summary.pdc_per_phase,
        "mean_novelty": summary.novelty_series,
        "cdr": summary.cdr,
    }
    lines = ["Workshop World evaluation summary", ""]
    lines += [f"WARNING: {w}" for w in warnings]
    lines.append(f"tau = {summary.tau}")
    for label, t, level in zip(summary.phase_labels, summary.phase_times, summary.pdc_per_phase):
        lines.append(f"PDC[{label} @ t={t:g}] = {level}")
    lines.append("CDR = absent (single phase)" if summary.cdr is None else f"CDR = {summary.cdr:.6g}")
    lines.append("")
    lines.append("efficiency (mean 1 - steps/B over solved; '-' = no successes)")
    lines.append("phase    " + " ".join(f"L{lvl:<6}" for lvl in summary.levels))
    for label, row in zip(summary.phase_labels, summary.efficiency):
        lines.append(f"{label:<8} " + " ".join(f"{'-' if v is None else format(v, '.3f'):<7}" for v in row))
    lines.append("")
    lines.append("mean novelty per phase: " + ", ".join(
        f"{label}={'-' if v is None else format(v, '.3f')}"
        for label, v in zip(summary.phase_labels, summary.novelty_series)
    ))
    return ReportBundle(frontier, ceiling, "\n".join(lines) + "\n", warnings)


def report(run_dir) -> ReportBundle:
    """Write the frontier-curve and ceiling-vs-novelty data plus a text summary."""
    run_dir = Path(run_dir)
    config, summaries = load_run(run_dir)
    bundle = build_report(config, summaries)
    for w in bundle.warnings:
        logger.warning(w)
    out = run_dir / "report"
    out.mkdir(parents=True, exist_ok=True)
    (out / "figure1_frontier.json").write_text(dumps(bundle.frontier), encoding="utf-8")
    (out / "figure2_ceiling_novelty.json").write_text(dumps(bundle.ceiling_novelty), encoding="utf-8")
    rows = ["phase_label,phase_time,level,success_rate"]
    for series in bundle.frontier.get("series", []):
        for level, rate in zip(bundle.frontier["levels"], series["success_rate"]):
            rows.append(f"{series['phase_label']},{series['phase_time']!r},{level},{rate!r}")
    (out / "frontier_curves.csv").write_text("\n".join(rows) + "\n", encoding="utf-8")
    (out / "summary.txt").write_text(bundle.text, encoding="utf-8")
    return bundle


def validate_batch(config: RunConfig, cap: int) -> list:
    """Oracle pass over the configured batch; one report dict per instance with H <= cap."""
    batch = generate_batch(config)
    rows = []
    for (level, index), inst in sorted(batch.items()):
        if inst.difficulty.H > cap:
            continue
        rep = validate_instance(inst, cap)
        row = {"level": level, "index": index, "seed": str(inst.seed), "instance_id": inst.instance_id,
               "H": inst.difficulty.H}
        row.update(rep.to_dict())
        rows.append(row)
    return rows
