from __future__ import annotations

import json
import sys
from dataclasses import replace
from pathlib import Path

import pytest

from conftest import tiny_instance
from workshop_world.agents import (
    AgentConfigError,
    AgentSpec,
    believed_instance,
    hidden_keys,
    make_agent,
    phase_sequence,
)
from workshop_world.core import Action, AmbiguityMask
from workshop_world.genesis import generate_instance
from workshop_world.sim import INVALID_ACTION, UNKNOWN, init_state, observe, run_interactive, run_plan, trace_to_plan

SCRIPT = Path(__file__).parent / "fixtures" / "scripted_agent.py"
SOLUTION = [Action.craft(0), Action.craft(1), Action.combine(3), Action.refine(2, "artefact")]


def play(spec, instance, episode_seed=0):
    agent = make_agent(spec)
    agent.start(episode_seed)
    try:
        return run_interactive(instance, agent), agent
    finally:
        agent.close()


def test_phase_sequence_labels_and_monotonicity():
    phases = phase_sequence("budgeted", [100, 1000, None])
    assert [p.phase_label for p in phases] == ["t1", "t2", "t3"]
    assert [p.phase_time for p in phases] == [1.0, 2.0, 3.0]
    with pytest.raises(AgentConfigError):
        phase_sequence("budgeted", [1000, 100])
    with pytest.raises(AgentConfigError):
        phase_sequence("budgeted", [None, 100])
    with pytest.raises(AgentConfigError):
        AgentSpec("beam")
    with pytest.raises(AgentConfigError):
        AgentSpec("oracle")
    with pytest.raises(AgentConfigError):
        AgentSpec("external")


def test_spec_roundtrip():
    spec = AgentSpec("beam", "t2", 2.0, 4, seed=9, metadata={"decoding": "greedy"})
    assert AgentSpec.from_dict(spec.to_dict()) == spec


def test_believed_model_zero_fills_unknowns(tiny_masked):
    obs = observe(init_state(tiny_masked), tiny_masked)
    model = believed_instance(obs)
    assert model.recipes[2].effect == (0.0, 0.0)
    assert model.synergies.get(4, 5) == (0.0, 0.0) or model.synergies.get(4, 5) is None
    assert hidden_keys(obs) == [("effect", 2), ("synergy", 4, 5)]


def test_budgeted_agent_solves_with_enough_nodes(tiny):
    result, agent = play(AgentSpec("budgeted", knob=None), tiny)
    assert result.solved and result.steps_used == 5
    assert agent.expanded > 0


def test_budgeted_agent_gives_up_when_starved(tiny):
    result, _ = play(AgentSpec("budgeted", knob=2), tiny)
    assert not result.solved and result.steps_used == 0


def test_budgeted_agent_probes_hidden_dependencies(tiny_masked):
    # The zero-filled belief has no solution, so the agent probes both unknowns
    # and then runs out of budget for the five-step plan.
    result, _ = play(AgentSpec("budgeted", knob=None), tiny_masked)
    assert not result.solved and result.skeleton() == "tt"
    roomy = tiny_instance(tiny_masked.mask, budget=7)
    result, _ = play(AgentSpec("budgeted", knob=None), roomy)
    assert result.solved and result.skeleton() == "ttccmr" and result.steps_used == 7


def test_solved_sets_are_nested_across_node_budgets(ladder):
    batch = [generate_instance(s, lvl, ladder) for lvl in (2, 3, 4) for s in range(6)]
    previous = set()
    for knob in (5, 30, 200, 2000, None):
        now = {i for i, inst in enumerate(batch) if play(AgentSpec("budgeted", knob=knob), inst)[0].solved}
        assert previous <= now
        previous = now
    assert previous


def test_greedy_is_deterministic(ladder):
    inst = generate_instance(8, 2, ladder)
    a, _ = play(AgentSpec("greedy"), inst)
    b, _ = play(AgentSpec("greedy"), inst)
    assert a == b


def test_beam_agent_solves_tiny(tiny):
    result, _ = play(AgentSpec("beam", knob=8), tiny)
    assert result.solved


def test_random_agent_depends_on_seeds_only(ladder):
    inst = generate_instance(4, 3, ladder)
    a, _ = play(AgentSpec("random", seed=1), inst, episode_seed=5)
    b, _ = play(AgentSpec("random", seed=1), inst, episode_seed=5)
    assert a == b
    runs = {play(AgentSpec("random", seed=s), inst, episode_seed=5)[0].trace for s in range(6)}
    assert len(runs) > 1
    assert a.steps_used <= a.budget


def test_agents_never_see_hidden_values(tiny_masked):
    seen = []

    def spy(obs):
        seen.append(json.dumps(obs.to_dict()))
        return agent(obs)

    agent = make_agent(AgentSpec("budgeted"))
    agent.start(0)
    run_interactive(tiny_masked, spy)
    first = json.loads(seen[0])
    assert first["recipes"][2]["effect"] == UNKNOWN
    assert all("final_attributes" not in s for s in seen)


def _external(mode, plan=(), log=None, timeout=5.0):
    cmd = [sys.executable, str(SCRIPT), mode, json.dumps([a.to_dict() for a in plan])]
    if log is not None:
        cmd.append(str(log))
    return AgentSpec("external", command=cmd, seed=42, timeout=timeout)


def test_external_agent_replays_plan(tiny, tmp_path):
    log = tmp_path / "agent.log"
    result, agent = play(_external("replay", SOLUTION, log), tiny)
    assert result.solved and agent.protocol_errors == 0
    assert result == run_plan(tiny, trace_to_plan(result))
    lines = [json.loads(x) for x in log.read_text().splitlines()]
    assert lines[0] == {"seed": "42"}
    assert lines[1]["type"] == "observe"
    assert "inventory" in lines[1]["observation"]
    assert lines[-1] == {"type": "end"}


@pytest.mark.parametrize("mode", ["garbage", "crash"])
def test_external_protocol_errors_count_as_unsolved(tiny, mode):
    result, agent = play(_external(mode), tiny)
    assert not result.solved
    assert result.failure_reason == INVALID_ACTION
    assert agent.protocol_errors == 1


def test_external_timeout(tiny):
    result, agent = play(_external("silent", timeout=0.3), tiny)
    assert not result.solved and agent.protocol_errors == 1


def test_external_launch_failure():
    agent = make_agent(AgentSpec("external", command=["/nonexistent/agent"]))
    with pytest.raises(AgentConfigError):
        agent.start(0)


def test_greedy_stays_within_budget_under_heavy_masking():
    inst = tiny_instance(AmbiguityMask(frozenset(), frozenset({0, 1, 2, 3})))
    result, _ = play(AgentSpec("greedy"), inst)
    assert result.steps_used <= result.budget


def test_greedy_with_one_legal_action_takes_it():
    lonely = replace(tiny_instance(), initial_inventory=(1,))
    obs = observe(init_state(lonely), lonely)
    agent = make_agent(AgentSpec("greedy"))
    agent.start(0)
    assert agent.act(obs) == Action.craft(0)


@pytest.mark.parametrize("level", [1, 2])
def test_unlimited_budgeted_agent_matches_oracle_cost(ladder, level):
    for seed in range(5):
        inst = generate_instance(seed, level, ladder)
        result, _ = play(AgentSpec("budgeted", knob=None), inst)
        assert result.solved and result.steps_used == inst.difficulty.H
