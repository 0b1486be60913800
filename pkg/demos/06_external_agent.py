"""
Plugging in an external agent process
=====================================

Any program that reads observations and writes actions as JSON lines can
be evaluated. The harness passes WW_AGENT_SEED in the environment and sends
{"type": "end"} when the episode is over.
"""

import sys
import tempfile
from pathlib import Path

from workshop_world.agents import AgentSpec
from workshop_world.core import DifficultyLadder
from workshop_world.harness import RunConfig, run_evaluation

script = Path(__file__).parent / "agents" / "replay_first_solution.py"
ladder = DifficultyLadder.from_tuples([(2, 1, 1, 0.0), (3, 1, 2, 0.0), (4, 2, 2, 0.0)])
config = RunConfig(
    ladder=ladder, N=4, base_seed=5,
    phases=[AgentSpec("external", command=[sys.executable, str(script)], timeout=30,
                      metadata={"note": "reference replay agent"})],
    output_dir=Path(tempfile.mkdtemp(prefix="ww-external-")),
)
log = run_evaluation(config)
print("success rate per level:", log.summary.curves[0])
print("protocol errors:", log.protocol_errors)
print("metrics:\n" + log.metrics_csv())
