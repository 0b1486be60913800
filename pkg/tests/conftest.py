from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from workshop_world.core import (  # noqa: E402
    AmbiguityMask,
    Constraint,
    DifficultyLadder,
    DifficultyVector,
    Instance,
    ItemSpec,
    Recipe,
    SynergyTable,
)

SMALL_LADDER = DifficultyLadder.from_tuples([
    (2, 1, 1, 0.0),
    (3, 1, 2, 0.0),
    (4, 2, 2, 0.5),
    (5, 2, 3, 0.5),
])


def tiny_instance(mask: AmbiguityMask = AmbiguityMask(), budget: int = 6) -> Instance:
    """Hand-built two-attribute workshop whose cheapest solution costs 5.

    Items: 0 frame (raw), 1 and 2 ores (raw), 3 and 4 modules, 5 refined
    module, 6 chassis. Artefact (6; 3, 4) has attributes (3.5, 1.5); refining
    module 3 into 5 inside the artefact gives (5, 1), which clears power >= 4.
    """
    z = (0.0, 0.0)
    items = [
        ItemSpec(0, "raw", z),
        ItemSpec(1, "raw", z),
        ItemSpec(2, "raw", z),
        ItemSpec(3, "module", (1.0, 0.0)),
        ItemSpec(4, "module", (0.0, 1.0)),
        ItemSpec(5, "module", z),
        ItemSpec(6, "intermediate", z),
    ]
    recipes = [
        Recipe(0, "craft", (1,), 3, 1, (1.0, 0.0)),
        Recipe(1, "craft", (2,), 4, 2, (1.0, 0.0)),
        Recipe(2, "refine", (3,), 5, 1, (3.0, 0.0)),
        Recipe(3, "combine", (0, 3, 4), 6, 1, z),
    ]
    synergies = SynergyTable({(3, 4): (0.5, 0.5), (4, 5): (1.0, 0.0)})
    return Instance(
        instance_id="tiny",
        seed=0,
        difficulty_level=1,
        difficulty=DifficultyVector(5, 1, 2, 0.0),
        attribute_dim=2,
        items=tuple(items),
        recipes=tuple(recipes),
        synergies=synergies,
        constraints=(Constraint(0, ">=", 4.0),),
        budget=budget,
        initial_inventory=(0, 1, 1, 2),
        mask=mask,
    )


@pytest.fixture
def tiny() -> Instance:
    return tiny_instance()


@pytest.fixture
def tiny_masked() -> Instance:
    return tiny_instance(AmbiguityMask(frozenset({(4, 5)}), frozenset({2})))


@pytest.fixture
def ladder() -> DifficultyLadder:
    return SMALL_LADDER


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "RESULT_LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for number in sorted(lines):
            terminalreporter.write_line(lines[number])
