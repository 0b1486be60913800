"""
Frontier curves, ceiling drift and novelty across phases
========================================================

Each phase is the same system with a larger search budget. The same batch
of instances is replayed at every phase; success rates per level give the
frontier curves, the highest level above tau is the ceiling (PDC), and the
ceiling's slope over phase time is the drift rate (CDR).
"""

import tempfile
from pathlib import Path

from workshop_world.agents import phase_sequence
from workshop_world.core import DifficultyLadder
from workshop_world.harness import RunConfig, report, run_evaluation

ladder = DifficultyLadder.from_tuples([
    (2, 1, 1, 0.0), (3, 1, 2, 0.0), (4, 2, 2, 0.0), (5, 2, 3, 0.0), (6, 3, 3, 0.0), (8, 3, 3, 0.0),
])
out = Path(tempfile.mkdtemp(prefix="ww-frontier-"))
config = RunConfig(
    ladder=ladder, N=12, base_seed=99,
    phases=phase_sequence("budgeted", [100, 1000, 10000]),
    tau=0.7, output_dir=out,
)
log = run_evaluation(config)
s = log.summary

print("success rate per level")
for label, curve in zip(s.phase_labels, s.curves):
    bars = "  ".join(f"{r:4.2f}" for r in curve)
    print(f"  {label}: {bars}")
print("PDC per phase:", s.pdc_per_phase, " CDR:", s.cdr)
print("mean novelty per phase:", [None if v is None else round(v, 3) for v in s.novelty_series])

# The same numbers, plus plot-ready JSON, land in the run directory.
report(out)
print("artefacts in", out)
for p in sorted(out.glob("*")) + sorted((out / "report").glob("*")):
    print("  ", p.relative_to(out))
