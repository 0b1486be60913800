"""Deterministic plan execution, budget accounting and observation masking."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Optional

from .core import (
    ActionKind,
    Action,
    AttributeVector,
    Instance,
    InvalidAction,
    Plan,
    RecipeKind,
    action_cost,
    aggregate_attributes,
    check_constraints,
    mask_key_effect,
    mask_key_synergy,
    pair_key,
    zeros,
)

UNKNOWN = "unknown"

BUDGET_EXHAUSTED = "budget-exhausted"
INVALID_ACTION = "invalid-action"
CONSTRAINTS_UNSATISFIED = "constraints-unsatisfied"

# Outcome tags recorded in traces.
APPLIED = "applied"
REVEALED = "revealed"
NOOP_TEST = "test-visible"


class _Submit:
    def __repr__(self) -> str:
        return "SUBMIT"


SUBMIT = _Submit()


@dataclass(frozen=True)
class Artefact:
    chassis: int
    modules: tuple  # sorted multiset of module ids

    @property
    def distinct_modules(self) -> int:
        return len(set(self.modules))


def artefact_attributes(artefact: Artefact, instance: Instance) -> AttributeVector:
    attrs = instance.item_attributes
    return aggregate_attributes(
        artefact.modules,
        [attrs[m] for m in artefact.modules],
        attrs[artefact.chassis],
        instance.synergies,
    )


@dataclass(frozen=True)
class SimState:
    inventory: tuple  # sorted multiset of item ids
    artefact: Optional[Artefact] = None
    steps_used: int = 0
    revealed: frozenset = frozenset()
    halted: bool = False
    failure_reason: Optional[str] = None


@dataclass(frozen=True)
class TraceRecord:
    action: Optional[Action]  # None when the agent answered with a non-action
    outcome: str
    steps_used: int

    def to_dict(self, step: int) -> dict:
        return {
            "step": step,
            "action": None if self.action is None else self.action.to_dict(),
            "outcome": self.outcome,
            "steps_used": self.steps_used,
        }


@dataclass(frozen=True)
class EpisodeResult:
    solved: bool
    steps_used: int
    budget: int
    final_attributes: Optional[AttributeVector]
    distinct_modules: int
    modules: tuple
    trace: tuple
    failure_reason: Optional[str] = None
    revealed: frozenset = field(default=frozenset(), compare=False)

    def skeleton(self) -> str:
        return "".join(
            r.action.symbol() for r in self.trace
            if r.action is not None and r.outcome in (APPLIED, REVEALED, NOOP_TEST)
        )

    def to_dict(self) -> dict:
        return {
            "solved": self.solved,
            "steps_used": self.steps_used,
            "budget": self.budget,
            "final_attributes": None if self.final_attributes is None else list(self.final_attributes),
            "distinct_modules": self.distinct_modules,
            "modules": list(self.modules),
            "skeleton": self.skeleton(),
            "failure_reason": self.failure_reason,
        }


def init_state(instance: Instance) -> SimState:
    return SimState(inventory=tuple(sorted(instance.initial_inventory)))


def _take(inventory: tuple, wanted: tuple) -> tuple | None:
    """Remove the multiset ``wanted`` from ``inventory``; None if not contained."""
    pool = list(inventory)
    for item in wanted:
        try:
            pool.remove(item)
        except ValueError:
            return None
    return tuple(pool)


def _put(inventory: tuple, item: int) -> tuple:
    return tuple(sorted(inventory + (item,)))


def _halt(state: SimState, reason: str) -> SimState:
    return replace(state, halted=True, failure_reason=reason)


def step(state: SimState, action, instance: Instance) -> tuple[SimState, str]:
    """Apply one action and return the new state with its trace outcome tag."""
    if state.halted:
        raise InvalidAction("episode already halted")
    if not isinstance(action, Action):
        return _halt(state, INVALID_ACTION), INVALID_ACTION
    try:
        cost = action_cost(action, instance.recipes)
    except InvalidAction:
        return _halt(state, INVALID_ACTION), INVALID_ACTION
    if state.steps_used + cost > instance.budget:
        return _halt(state, BUDGET_EXHAUSTED), BUDGET_EXHAUSTED
    try:
        new_state, tag = _transition(state, action, instance)
    except InvalidAction:
        return _halt(state, INVALID_ACTION), INVALID_ACTION
    return replace(new_state, steps_used=state.steps_used + cost), tag


def apply_action(state: SimState, action, instance: Instance) -> SimState:
    return step(state, action, instance)[0]


def _transition(state: SimState, action: Action, instance: Instance) -> tuple[SimState, str]:
    kind = action.kind
    if kind is ActionKind.TEST:
        if action.pair is not None:
            a, b = action.pair
            if a == b or a not in instance.module_ids or b not in instance.module_ids:
                raise InvalidAction(f"test probes a non-module pair {action.pair}")
            key = mask_key_synergy(a, b)
            hidden = pair_key(a, b) in instance.mask.hidden_synergy_pairs
        else:
            key = mask_key_effect(action.recipe)
            hidden = action.recipe in instance.mask.hidden_recipe_effects
        if not hidden or key in state.revealed:
            return state, NOOP_TEST
        return replace(state, revealed=state.revealed | {key}), REVEALED

    if kind is ActionKind.REPAIR:
        art = state.artefact
        if art is None:
            raise InvalidAction("repair without an artefact")
        if action.remove not in art.modules:
            raise InvalidAction(f"module {action.remove} not in artefact")
        if action.insert not in instance.module_ids:
            raise InvalidAction(f"item {action.insert} is not a module")
        inventory = _take(state.inventory, (action.insert,))
        if inventory is None:
            raise InvalidAction(f"module {action.insert} not in inventory")
        modules = list(art.modules)
        modules.remove(action.remove)
        modules.append(action.insert)
        return replace(
            state,
            inventory=_put(inventory, action.remove),
            artefact=Artefact(art.chassis, tuple(sorted(modules))),
        ), APPLIED

    recipe = instance.recipe(action.recipe)
    if kind is ActionKind.REFINE and action.target == "artefact":
        art = state.artefact
        if art is None:
            raise InvalidAction("refine targets a missing artefact")
        (source,) = recipe.inputs
        if source not in art.modules or recipe.output not in instance.module_ids:
            raise InvalidAction(f"recipe {recipe.id} cannot refine the artefact")
        modules = list(art.modules)
        modules.remove(source)
        modules.append(recipe.output)
        return replace(state, artefact=Artefact(art.chassis, tuple(sorted(modules)))), APPLIED

    inventory = _take(state.inventory, recipe.inputs)
    if inventory is None:
        raise InvalidAction(f"inputs of recipe {recipe.id} not in inventory")
    if recipe.kind is RecipeKind.COMBINE:
        modules = tuple(i for i in recipe.inputs if i in instance.module_ids)
        return replace(state, inventory=inventory, artefact=Artefact(recipe.output, modules)), APPLIED
    return replace(state, inventory=_put(inventory, recipe.output)), APPLIED


def evaluate_state(state: SimState, instance: Instance) -> tuple[bool, Optional[AttributeVector], int]:
    """(constraints satisfied, artefact attributes or None, distinct modules)."""
    if state.artefact is None:
        attrs = None
        distinct = 0
        judged = zeros(instance.attribute_dim)
    else:
        attrs = artefact_attributes(state.artefact, instance)
        distinct = state.artefact.distinct_modules
        judged = attrs
    ok = check_constraints(judged, distinct, instance.constraints, instance.difficulty.C)
    return ok, attrs, distinct


def finalize(state: SimState, trace, instance: Instance) -> EpisodeResult:
    ok, attrs, distinct = evaluate_state(state, instance)
    reason = state.failure_reason
    solved = reason is None and ok and state.steps_used <= instance.budget
    if reason is None and not solved:
        reason = CONSTRAINTS_UNSATISFIED
    return EpisodeResult(
        solved=solved,
        steps_used=state.steps_used,
        budget=instance.budget,
        final_attributes=attrs,
        distinct_modules=distinct,
        modules=state.artefact.modules if state.artefact else (),
        trace=tuple(trace),
        failure_reason=reason,
        revealed=state.revealed,
    )


def run_plan(instance: Instance, plan) -> EpisodeResult:
    state = init_state(instance)
    trace = []
    for action in plan:
        state, tag = step(state, action, instance)
        trace.append(TraceRecord(action, tag, state.steps_used))
        if state.halted:
            break
    return finalize(state, trace, instance)


@dataclass(frozen=True)
class Observation:
    """What an agent may see: ground truth minus masked, unrevealed parameters.

    Produced attributes of items and of the artefact are never included since
    they would leak hidden effects and synergies; agents recompute them from
    the visible model.
    """

    attribute_dim: int
    items: tuple
    recipes: tuple
    synergies: tuple
    constraints: tuple
    required_modules: int
    budget: int
    budget_remaining: int
    inventory: tuple
    artefact: Optional[Artefact]
    revealed: tuple

    def to_dict(self) -> dict:
        return {
            "attribute_dim": self.attribute_dim,
            "items": [dict(x) for x in self.items],
            "recipes": [dict(x) for x in self.recipes],
            "synergies": [dict(x) for x in self.synergies],
            "constraints": [dict(x) for x in self.constraints],
            "required_modules": self.required_modules,
            "budget": self.budget,
            "budget_remaining": self.budget_remaining,
            "inventory": list(self.inventory),
            "artefact": None if self.artefact is None else {
                "chassis": self.artefact.chassis, "modules": list(self.artefact.modules),
            },
            "revealed": [dict(x) for x in self.revealed],
        }


def _frozen(d: dict) -> tuple:
    return tuple(d.items())


def observe(state: SimState, instance: Instance) -> Observation:
    mask = instance.mask
    hidden_effects = {r for r in mask.hidden_recipe_effects if mask_key_effect(r) not in state.revealed}
    hidden_pairs = {
        p for p in mask.hidden_synergy_pairs if mask_key_synergy(*p) not in state.revealed
    }
    items = tuple(
        _frozen({"id": i.id, "kind": i.kind.value, "base_attributes": list(i.base_attributes)})
        for i in instance.items
    )
    recipes = tuple(
        _frozen({
            "id": r.id,
            "kind": r.kind.value,
            "inputs": list(r.inputs),
            "output": r.output,
            "cost": r.cost,
            "effect": UNKNOWN if r.id in hidden_effects else list(r.effect),
        })
        for r in instance.recipes
    )
    synergies = tuple(
        _frozen({"pair": list(p), "value": UNKNOWN if p in hidden_pairs else list(v)})
        for p, v in instance.synergies.items()
    )
    constraints = tuple(
        _frozen({"attribute": c.attribute, "comparator": c.comparator, "threshold": c.threshold})
        for c in instance.constraints
    )
    revealed = []
    for key in sorted(state.revealed):
        if key[0] == "effect":
            revealed.append(_frozen({"recipe": key[1], "effect": list(instance.recipes[key[1]].effect)}))
        else:
            revealed.append(_frozen({"pair": [key[1], key[2]], "value": list(instance.synergies.get(key[1], key[2]))}))
    return Observation(
        attribute_dim=instance.attribute_dim,
        items=items,
        recipes=recipes,
        synergies=synergies,
        constraints=constraints,
        required_modules=instance.difficulty.C,
        budget=instance.budget,
        budget_remaining=instance.budget - state.steps_used,
        inventory=state.inventory,
        artefact=state.artefact,
        revealed=tuple(revealed),
    )


AgentCallback = Callable[[Observation], object]


def interactive_step(state: SimState, instance: Instance, agent_callback: AgentCallback):
    """One closed-loop step: observe, ask the agent, apply its answer.

    Returns ``(observation, new_state, record)``. A SUBMIT answer halts the
    state without a failure reason and yields no trace record, so a closed-loop
    trace replays verbatim as an open-loop plan. Anything that is not an Action
    or SUBMIT halts the state as an invalid action.
    """
    obs = observe(state, instance)
    try:
        answer = agent_callback(obs)
    except InvalidAction:
        answer = None
    if answer is SUBMIT:
        return obs, replace(state, halted=True), None
    new_state, tag = step(state, answer, instance)
    action = answer if isinstance(answer, Action) else None
    return obs, new_state, TraceRecord(action, tag, new_state.steps_used)


def run_interactive(instance: Instance, agent_callback: AgentCallback, max_steps: int | None = None,
                    on_observation: Callable[[Observation, SimState], None] | None = None) -> EpisodeResult:
    """Drive an agent until it submits or the episode halts.

    Zero-cost submits are the only way to stop without spending budget, so the
    loop is bounded by ``max_steps`` (default: budget + 1 decisions).
    """
    state = init_state(instance)
    trace = []
    limit = max_steps if max_steps is not None else instance.budget + 1
    for _ in range(limit):
        obs, state, record = interactive_step(state, instance, agent_callback)
        if on_observation is not None:
            on_observation(obs, state)
        if record is not None:
            trace.append(record)
        if state.halted:
            break
    else:
        state = _halt(state, INVALID_ACTION)
    if not state.halted:
        state = replace(state, halted=True)
    return finalize(state, trace, instance)


def trace_to_plan(result: EpisodeResult) -> Plan:
    return Plan(tuple(r.action for r in result.trace if r.action is not None))
