"""``ww`` command line: generate, run, score, report, validate.

Exit codes: 0 success, 2 configuration error, 3 generation error,
4 agent-protocol error (the run is still persisted; affected attempts are
counted as unsolved).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .agents import AgentConfigError
from .core import ContractViolation
from .genesis import GenerationConfigError
from .harness import (
    AgentLaunchError,
    ConfigError,
    RunConfig,
    generate_batch,
    load_config,
    report,
    run_evaluation,
    score,
    validate_batch,
)
from .schema import dumps

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_GENERATION = 3
EXIT_PROTOCOL = 4


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_overrides(data: dict, overrides) -> dict:
    """Apply ``dotted.key=value`` overrides; values are parsed as JSON when possible."""
    data = json.loads(json.dumps(data))
    for item in overrides or ():
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        node = data
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override {item!r} descends into a non-table value")
        node[parts[-1]] = _parse_value(value)
    return data


def resolve_config(args) -> RunConfig:
    data = load_config(args.config)
    data = apply_overrides(data, args.set)
    for attr, key in (("n", "n"), ("base_seed", "base_seed"), ("tau", "tau"), ("workers", "workers"),
                      ("output", "output_dir")):
        value = getattr(args, attr, None)
        if value is not None:
            data[key] = str(value) if key == "output_dir" else value
    return RunConfig.from_dict(data)


def _add_config_args(p: argparse.ArgumentParser, with_output: bool = True) -> None:
    p.add_argument("config", type=Path, help="run configuration (.toml or .json)")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config entry (repeatable)")
    p.add_argument("--n", type=int, help="instances per level")
    p.add_argument("--base-seed", type=int, dest="base_seed")
    if with_output:
        p.add_argument("-o", "--output", type=Path, help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ww", description="Workshop World benchmark driver")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="generate and cache the instance batch")
    _add_config_args(p)

    p = sub.add_parser("run", help="run every phase on the batch, score and persist")
    _add_config_args(p)
    p.add_argument("--tau", type=float)
    p.add_argument("--workers", type=int)

    p = sub.add_parser("score", help="recompute metrics from a run directory")
    p.add_argument("run_dir", type=Path)
    p.add_argument("--tau", type=float)

    p = sub.add_parser("report", help="write plot data and a text summary for a run")
    p.add_argument("run_dir", type=Path)

    p = sub.add_parser("validate", help="oracle pass over the batch")
    _add_config_args(p)
    p.add_argument("--cap", type=int, required=True, help="oracle cost cap")
    return parser


def _cmd_generate(args) -> int:
    config = resolve_config(args)
    if config.output_dir is None:
        raise ConfigError("generate needs an output directory (-o or output_dir)")
    batch = generate_batch(config)
    print(f"wrote {len(batch)} instances to {config.output_dir / 'instances'}")
    return EXIT_OK


def _cmd_run(args) -> int:
    config = resolve_config(args)
    if config.output_dir is None:
        raise ConfigError("run needs an output directory (-o or output_dir)")
    log = run_evaluation(config)
    s = log.summary
    print(f"PDC per phase: {s.pdc_per_phase}")
    print("CDR: absent" if s.cdr is None else f"CDR: {s.cdr:.6g}")
    print(f"results in {config.output_dir}")
    if log.protocol_errors:
        print(f"{log.protocol_errors} agent protocol error(s)", file=sys.stderr)
        return EXIT_PROTOCOL
    return EXIT_OK


def _cmd_score(args) -> int:
    summary = score(args.run_dir, tau=args.tau)
    sys.stdout.write(dumps(summary.to_dict()))
    return EXIT_OK


def _cmd_report(args) -> int:
    bundle = report(args.run_dir)
    sys.stdout.write(bundle.text)
    return EXIT_OK


def _cmd_validate(args) -> int:
    config = resolve_config(args)
    rows = validate_batch(config, args.cap)
    for row in rows:
        print(json.dumps(row, sort_keys=True))
    bad = [r for r in rows if r["oracle_min_cost"] != r["H"]]
    print(f"{len(rows) - len(bad)}/{len(rows)} instances match their horizon", file=sys.stderr)
    return EXIT_OK if not bad else EXIT_GENERATION


COMMANDS = {
    "generate": _cmd_generate,
    "run": _cmd_run,
    "score": _cmd_score,
    "report": _cmd_report,
    "validate": _cmd_validate,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except GenerationConfigError as exc:
        print(f"generation error: {exc}", file=sys.stderr)
        return EXIT_GENERATION
    except (ConfigError, AgentConfigError, ContractViolation, FileNotFoundError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except AgentLaunchError as exc:
        print(f"agent protocol error: {exc}", file=sys.stderr)
        return EXIT_PROTOCOL


if __name__ == "__main__":
    sys.exit(main())
