"""
Exact search: minimum solving cost and alternative solutions
============================================================

Uniform-cost search over canonical states (inventory multiset, artefact)
finds the cheapest plan; a node budget turns runaway searches into an
explicit ``NodeBudgetExceeded``.
"""

import time

from workshop_world import DifficultyLadder, enumerate_solutions, generate_instance
from workshop_world.oracle import NodeBudgetExceeded, uniform_cost_search

ladder = DifficultyLadder.from_tuples([(2, 1, 1, 0), (4, 2, 2, 0), (6, 3, 3, 0), (8, 3, 3, 0)])

print("level  H  found  expanded  seconds")
for level in range(1, len(ladder) + 1):
    inst = generate_instance(12, level, ladder)
    t0 = time.perf_counter()
    found = uniform_cost_search(inst, cap=inst.budget)
    print(f"{level:>5} {inst.difficulty.H:>2} {found.cost:>6} {found.expanded:>9}  {time.perf_counter() - t0:.3f}")

inst = generate_instance(12, 3, ladder)
try:
    uniform_cost_search(inst, cap=inst.budget, node_budget=50)
except NodeBudgetExceeded as exc:
    print("with 50 nodes:", exc)

# Several distinct solutions, cheapest first.
for plan in enumerate_solutions(inst, cap=inst.budget, max_count=4):
    print(plan.cost(inst), " ".join(a.symbol() + str(a.recipe) for a in plan))
