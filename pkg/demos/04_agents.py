"""
Baseline agents side by side
============================

All built-in agents plan on the *visible* model (hidden values read as
zero). Greedy is myopic, Beam keeps a fixed-width frontier, and the
budgeted exhaustive agent runs uniform-cost search with a node budget.
"""

from workshop_world import DifficultyLadder, generate_instance
from workshop_world.agents import AgentSpec, make_agent
from workshop_world.sim import run_interactive

ladder = DifficultyLadder.from_tuples([(2, 1, 1, 0), (3, 1, 2, 0), (4, 2, 2, 0), (6, 3, 3, 0.5)])
specs = [
    AgentSpec("random", seed=1),
    AgentSpec("greedy"),
    AgentSpec("beam", knob=4),
    AgentSpec("budgeted", knob=200),
    AgentSpec("budgeted", knob=None),
]

print(f"{'agent':<16}" + "".join(f"L{lvl:<6}" for lvl in range(1, len(ladder) + 1)))
for spec in specs:
    row = []
    for level in range(1, len(ladder) + 1):
        solved = 0
        for seed in range(8):
            inst = generate_instance(seed, level, ladder)
            agent = make_agent(spec)
            agent.start(inst.seed)
            solved += run_interactive(inst, agent).solved
            agent.close()
        row.append(f"{solved}/8")
    name = spec.kind if spec.knob is None else f"{spec.kind}({spec.knob})"
    print(f"{name:<16}" + "".join(f"{r:<7}" for r in row))
