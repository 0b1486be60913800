"""Workshop World: procedural planning benchmark and frontier estimators."""

from .core import (
    Action,
    ActionKind,
    AmbiguityMask,
    Constraint,
    ContractViolation,
    DifficultyLadder,
    DifficultyVector,
    Instance,
    InvalidAction,
    ItemKind,
    ItemSpec,
    Plan,
    Recipe,
    RecipeKind,
    SynergyTable,
    action_cost,
    aggregate_attributes,
    check_constraints,
)
from .genesis import GeneratorConfig, GenerationConfigError, generate_instance, validate_instance
from .oracle import enumerate_solutions, solve_min_steps
from .sim import SUBMIT, EpisodeResult, Observation, run_interactive, run_plan

__version__ = "0.1.0"
