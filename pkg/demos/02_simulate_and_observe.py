"""
Stepping the simulator and what an agent gets to see
====================================================

Plans run open-loop with ``run_plan``; agents run closed-loop through
observations. Masked values show up as the string "unknown" until a Test
action reveals them (each Test costs one step).
"""

import json

from workshop_world import Action, DifficultyLadder, generate_instance
from workshop_world.genesis import generate_with_backbone
from workshop_world.sim import SUBMIT, init_state, observe, run_interactive, run_plan, step, trace_to_plan

ladder = DifficultyLadder.from_tuples([(4, 2, 2, 0.5)])
inst, backbone = generate_with_backbone(3, 1, ladder)

obs = observe(init_state(inst), inst)
hidden = [dict(r)["id"] for r in obs.recipes if dict(r)["effect"] == "unknown"]
print("recipes with hidden effects:", hidden)
print("hidden synergy pairs:", [dict(s)["pair"] for s in obs.synergies if dict(s)["value"] == "unknown"])

# Testing a hidden effect moves it into the observation's "revealed" list.
if hidden:
    state, tag = step(init_state(inst), Action.test_effect(hidden[0]), inst)
    print("test outcome:", tag, "steps used:", state.steps_used)
    print("revealed:", [dict(x) for x in observe(state, inst).revealed])

# An invalid action halts the episode immediately without charging budget.
bad = run_plan(inst, [Action.combine(backbone.actions[-1].recipe)])
print("combine with nothing crafted:", bad.failure_reason, "steps", bad.steps_used)

# Closed loop: a callback that replays the backbone, then submits.
moves = iter(list(backbone) + [SUBMIT])
result = run_interactive(inst, lambda o: next(moves))
print("interactive:", result.solved, result.steps_used, "skeleton", result.skeleton())

# Every closed-loop trace replays verbatim as an open-loop plan.
assert run_plan(inst, trace_to_plan(result)) == result
print(json.dumps(observe(init_state(inst), inst).to_dict())[:200], "...")

# Nothing in this script depends on hidden values: the same instance
# regenerated from its seed is identical.
assert generate_instance(3, 1, ladder) == inst
