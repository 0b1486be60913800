"""
Generating an instance and checking its horizon
===============================================

An instance is fully determined by (seed, level, ladder, generator config).
This script builds one, walks through its catalog, replays the hidden
backbone plan and asks the oracle whether anything cheaper exists.
"""

from workshop_world import DifficultyLadder, GeneratorConfig, generate_instance, validate_instance
from workshop_world.genesis import deceptive_terminals, generate_with_backbone, horizon_certificate
from workshop_world.sim import run_plan

# A ladder is an ordered list of difficulty vectors (H, K, C, A):
# horizon, number of constraints, required distinct modules, ambiguity.
ladder = DifficultyLadder.from_tuples([(3, 1, 2, 0.0), (5, 2, 3, 0.5)])
inst = generate_instance(seed=7, level=2, ladder=ladder, config=GeneratorConfig())

print(inst.instance_id, "difficulty", inst.difficulty.as_tuple(), "budget", inst.budget)
print(f"{len(inst.items)} items, {len(inst.recipes)} recipes, {len(inst.synergies)} synergy pairs")
for c in inst.constraints:
    print(f"  constraint: attribute {c.attribute} {c.comparator} {c.threshold:g}")
print("initial inventory:", inst.initial_inventory)

# Recipes, grouped by kind.
for r in inst.recipes:
    hidden = " (effect hidden)" if r.id in inst.mask.hidden_recipe_effects else ""
    print(f"  r{r.id:<3} {r.kind.value:<8} {list(r.inputs)} -> {r.output}  cost {r.cost}{hidden}")

# The generator also returns the backbone it built; it costs exactly H.
_, backbone = generate_with_backbone(7, 2, ladder)
result = run_plan(inst, backbone)
print("backbone:", [a.to_dict() for a in backbone])
print("backbone solves:", result.solved, "at cost", result.steps_used)

# The power-per-cost certificate proves nothing cheaper can work...
print("certificate holds:", horizon_certificate(inst))
# ...and the oracle confirms it by search.
print(validate_instance(inst, cap=inst.budget))

# Deceptive branches look attractive but undershoot a constraint.
print("deceptive combine recipes:", [r.id for r in deceptive_terminals(inst)])
