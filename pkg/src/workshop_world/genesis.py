"""Seeded procedural generation of Workshop World instances.

Horizon guarantee
-----------------
Every generated instance carries a *power-per-cost certificate*: with ``u`` the
configured power unit,

* each module has power <= u * (cheapest cost of producing it),
* each assembled chassis has power <= u * (cost of its combine recipe),
* every synergy term has power <= 0,

and constraint 0 demands ``power >= u * H``. Each module inside a final
artefact traces back to its own disjoint set of production actions, so any
satisfying plan costs at least H. The backbone meets every bound with
equality and costs exactly H, hence the minimum solving cost is H. The
oracle re-checks this on small instances.
"""

from __future__ import annotations

import graphlib
import math
from dataclasses import asdict, dataclass, replace
from typing import Optional

import numpy as np

from .core import (
    ATTRIBUTE_NAMES,
    AmbiguityMask,
    Action,
    Constraint,
    ContractViolation,
    DifficultyLadder,
    DifficultyVector,
    Instance,
    ItemKind,
    ItemSpec,
    Plan,
    Recipe,
    RecipeKind,
    SynergyTable,
    aggregate_attributes,
    is_acyclic,
    pair_key,
)
from .oracle import NodeBudgetExceeded, uniform_cost_search

RNG_TAG = "numpy-PCG64/SeedSequence(seed,spawn_key=(level,stream))"
EXCEEDED_CAP = "exceeded-cap"

_STREAMS = {"catalog": 0, "backbone": 1, "deception": 2, "mask": 3}
_WEIGHT = ATTRIBUTE_NAMES.index("weight")


class GenerationConfigError(ValueError):
    """The requested difficulty cannot be realised with this configuration."""


@dataclass(frozen=True)
class GeneratorConfig:
    raw_kinds: int = 4
    distractor_modules: int = 2
    deceptive_branch_count: int = 2
    synergy_density: float = 0.5
    cost_range: tuple = (1, 2)
    budget_slack: int = 2
    max_chain_length: int = 3
    spare_raws: int = 2
    power_unit: int = 4
    attribute_dim: int = 4
    rng_algorithm_tag: str = RNG_TAG

    def __post_init__(self):
        object.__setattr__(self, "cost_range", tuple(self.cost_range))
        lo, hi = self.cost_range
        if lo < 1 or hi < lo:
            raise GenerationConfigError(f"cost_range must satisfy 1 <= min <= max, got {self.cost_range}")
        if self.budget_slack < 0:
            raise GenerationConfigError("budget_slack must be >= 0")
        if self.deceptive_branch_count < 0 or self.distractor_modules < 0 or self.spare_raws < 0:
            raise GenerationConfigError("catalog counts must be >= 0")
        if not 0.0 <= self.synergy_density <= 1.0:
            raise GenerationConfigError("synergy_density must lie in [0, 1]")
        if self.raw_kinds < 1 or self.max_chain_length < 1 or self.power_unit < 1:
            raise GenerationConfigError("raw_kinds, max_chain_length and power_unit must be >= 1")
        if self.attribute_dim < 1:
            raise GenerationConfigError("attribute_dim must be >= 1")
        if self.rng_algorithm_tag != RNG_TAG:
            raise GenerationConfigError(f"unsupported PRNG {self.rng_algorithm_tag!r}; only {RNG_TAG!r}")

    def to_dict(self) -> dict:
        out = asdict(self)
        out["cost_range"] = list(self.cost_range)
        return out


@dataclass(frozen=True)
class ValidationReport:
    """Oracle verdict on one instance.

    ``shorter_path_exists`` and ``solvable_within_B`` are None when the capped
    search could not decide them.
    """

    oracle_min_cost: object  # int or EXCEEDED_CAP
    exact_H_match: bool
    shorter_path_exists: Optional[bool]
    solvable_within_B: Optional[bool]

    def to_dict(self) -> dict:
        return asdict(self)


def substream(seed: int, level: int, stream: str) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(level), _STREAMS[stream]))
    return np.random.Generator(np.random.PCG64(ss))


def _randint(rng: np.random.Generator, lo: int, hi: int) -> int:
    """Uniform integer in [lo, hi]."""
    return int(rng.integers(lo, hi + 1))


class _Draft:
    """Mutable catalog under construction; frozen into an Instance at the end."""

    def __init__(self, dim: int):
        self.dim = dim
        self.items: list[ItemSpec] = []
        self.recipes: list[Recipe] = []
        self.synergies: dict = {}
        self.inventory: list[int] = []

    @classmethod
    def from_instance(cls, instance: Instance) -> _Draft:
        d = cls(instance.attribute_dim)
        d.items = list(instance.items)
        d.recipes = list(instance.recipes)
        d.synergies = dict(instance.synergies.items())
        d.inventory = list(instance.initial_inventory)
        return d

    def item(self, kind: ItemKind, base) -> int:
        self.items.append(ItemSpec(len(self.items), kind, tuple(base)))
        return len(self.items) - 1

    def produced(self, kind: ItemKind, recipe_kind: RecipeKind, inputs, cost: int, final, rng) -> int:
        """Add an item and its unique recipe so that base + effect == final."""
        effect = [_randint(rng, -1, 2) for _ in range(self.dim)]
        base = [f - e for f, e in zip(final, effect)]
        out = self.item(kind, base)
        self.recipes.append(Recipe(len(self.recipes), recipe_kind, tuple(inputs), out, cost, tuple(effect)))
        return out

    def attrs(self, item_id: int) -> tuple:
        base = self.items[item_id].base_attributes
        for r in self.recipes:
            if r.output == item_id:
                return tuple(b + e for b, e in zip(base, r.effect))
        return base

    def modules(self) -> list[int]:
        return [i.id for i in self.items if i.kind is ItemKind.MODULE]

    def raws(self) -> list[int]:
        return [i.id for i in self.items if i.kind is ItemKind.RAW]

    def freeze(self, like: Instance, **changes) -> Instance:
        return replace(
            like,
            items=tuple(self.items),
            recipes=tuple(self.recipes),
            synergies=SynergyTable(self.synergies),
            initial_inventory=tuple(sorted(self.inventory)),
            **changes,
        )


def _module_profile(rng, dim: int, power: float) -> list:
    """A module's final attributes: given power, random small secondary stats."""
    out = [float(power)]
    for k in range(1, dim):
        out.append(float(_randint(rng, 1, 4) if k == _WEIGHT else _randint(rng, 0, 4)))
    return out


def _synergy_vector(rng, dim: int, power_zero: bool) -> tuple:
    vec = [0.0 if power_zero else float(-_randint(rng, 0, 1))]
    vec += [float(_randint(rng, -2, 2)) for _ in range(1, dim)]
    return tuple(vec)


def _add_synergies(draft: _Draft, new_modules, rng, density: float, power_zero: bool) -> None:
    """Draw synergy entries between each new module and every earlier module."""
    seen = []
    for m in draft.modules():
        if m in new_modules:
            for other in seen:
                if rng.random() < density:
                    draft.synergies[pair_key(m, other)] = _synergy_vector(rng, draft.dim, power_zero)
        seen.append(m)


def _partition_costs(rng, n_actions: int, total: int, lo: int, hi: int) -> list[int]:
    costs = [lo] * n_actions
    extra = total - lo * n_actions
    while extra > 0:
        open_slots = [i for i, c in enumerate(costs) if c < hi]
        costs[open_slots[_randint(rng, 0, len(open_slots) - 1)]] += 1
        extra -= 1
    return costs


def _chain_lengths(rng, delta: DifficultyVector, config: GeneratorConfig) -> list[int]:
    """Chain lengths whose action count n admits a cost split: lo * n <= H <= hi * n."""
    n_min, n_max = _action_count_range(delta, config)
    n_actions = _randint(rng, n_min, n_max)
    lengths = [1] * delta.C
    for _ in range(n_actions - 1 - delta.C):
        open_chains = [i for i, n in enumerate(lengths) if n < config.max_chain_length]
        lengths[open_chains[_randint(rng, 0, len(open_chains) - 1)]] += 1
    return lengths


def _action_count_range(delta: DifficultyVector, config: GeneratorConfig) -> tuple[int, int]:
    lo, hi = config.cost_range
    n_min = max(1 + delta.C, -(-delta.H // hi))
    n_max = min(1 + delta.C * config.max_chain_length, delta.H // lo)
    return n_min, n_max


def _check_feasible(delta: DifficultyVector, config: GeneratorConfig) -> None:
    lo, hi = config.cost_range
    if delta.K < 1:
        raise GenerationConfigError("generation needs K >= 1: the power constraint enforces the horizon")
    if delta.K > config.attribute_dim:
        raise GenerationConfigError(f"K={delta.K} exceeds attribute dimension {config.attribute_dim}")
    if delta.C < 1:
        raise GenerationConfigError("generation needs C >= 1 module in the target artefact")
    min_h = lo * (1 + delta.C)
    max_h = hi * (1 + delta.C * config.max_chain_length)
    if not min_h <= delta.H <= max_h:
        raise GenerationConfigError(
            f"H={delta.H} cannot be split into a combine plus {delta.C} chains "
            f"(feasible range {min_h}..{max_h} for cost_range {config.cost_range})"
        )
    n_min, n_max = _action_count_range(delta, config)
    if n_min > n_max:
        raise GenerationConfigError(f"H={delta.H} is not a sum of costs drawn from {config.cost_range}")


def build_backbone(delta: DifficultyVector, config: GeneratorConfig, rng, *,
                   seed: int = 0, level: int = 1) -> tuple[Plan, Instance]:
    """Build a layered solution chain of total cost exactly H and bind constraints to it."""
    _check_feasible(delta, config)
    lo, hi = config.cost_range
    dim, unit = config.attribute_dim, config.power_unit
    lengths = _chain_lengths(rng, delta, config)
    n_actions = 1 + sum(lengths)
    costs = _partition_costs(rng, n_actions, delta.H, lo, hi)
    combine_cost, chain_costs = costs[0], costs[1:]

    draft = _Draft(dim)
    frame = draft.item(ItemKind.RAW, [0.0] * dim)
    for _ in range(config.raw_kinds):
        draft.item(ItemKind.RAW, [float(_randint(rng, 0, 2)) for _ in range(dim)])
    generic = draft.raws()[1:]

    plan: list[Action] = []
    backbone_modules = []
    pos = 0
    for length in lengths:
        chain = chain_costs[pos:pos + length]
        pos += length
        raws = [generic[_randint(rng, 0, len(generic) - 1)] for _ in range(_randint(rng, 1, 2))]
        draft.inventory.extend(raws)
        spent = 0
        current = None
        for step_no, cost in enumerate(chain):
            spent += cost
            last = step_no == len(chain) - 1
            kind = ItemKind.MODULE if last else ItemKind.INTERMEDIATE
            final = _module_profile(rng, dim, unit * spent) if last else \
                [float(_randint(rng, 0, 3)) for _ in range(dim)]
            if current is None:
                current = draft.produced(kind, RecipeKind.CRAFT, raws, cost, final, rng)
                plan.append(Action.craft(len(draft.recipes) - 1))
            else:
                current = draft.produced(kind, RecipeKind.REFINE, [current], cost, final, rng)
                plan.append(Action.refine(len(draft.recipes) - 1))
        backbone_modules.append(current)

    _add_synergies(draft, set(backbone_modules), rng, config.synergy_density, power_zero=True)
    chassis_final = [float(unit * combine_cost)] + [float(_randint(rng, 0, 2)) for _ in range(1, dim)]
    chassis = draft.produced(
        ItemKind.INTERMEDIATE, RecipeKind.COMBINE, [frame] + backbone_modules, combine_cost, chassis_final, rng
    )
    plan.append(Action.combine(len(draft.recipes) - 1))
    draft.inventory.append(frame)

    achieved = aggregate_attributes(
        backbone_modules,
        [draft.attrs(m) for m in backbone_modules],
        draft.attrs(chassis),
        SynergyTable(draft.synergies),
    )
    constraints = [Constraint(0, ">=", achieved[0])]
    others = list(range(1, dim))
    picks = rng.permutation(len(others))[: delta.K - 1]
    for idx in sorted(int(others[p]) for p in picks):
        comparator = "<=" if idx == _WEIGHT else ">="
        constraints.append(Constraint(idx, comparator, achieved[idx]))

    shell = Instance(
        instance_id=instance_name(level, seed),
        seed=seed,
        difficulty_level=level,
        difficulty=delta,
        attribute_dim=dim,
        items=(),
        recipes=(),
        synergies=SynergyTable(),
        constraints=tuple(constraints),
        budget=delta.H + config.budget_slack,
        initial_inventory=(),
        generator={"rng": config.rng_algorithm_tag, "config": config.to_dict(), "power_unit": unit},
    )
    return Plan(plan), draft.freeze(shell)


def _backbone_combine(instance: Instance) -> Recipe:
    combines = [r for r in instance.recipes if r.kind is RecipeKind.COMBINE]
    if not combines:
        raise GenerationConfigError("instance has no combine recipe to deceive around")
    return combines[0]


def add_deception(instance: Instance, rng, config: GeneratorConfig) -> Instance:
    """Add cheaper look-alike branches whose artefacts undershoot the power threshold.

    Each branch swaps one backbone module for a cheaply crafted module with a
    power shortfall but better-looking secondary stats, plus a combine recipe
    assembling that variant. Distractor modules and spare raws add branching.
    """
    if config.deceptive_branch_count == 0 and config.distractor_modules == 0 and config.spare_raws == 0:
        return instance
    lo, hi = config.cost_range
    unit, dim = config.power_unit, instance.attribute_dim
    draft = _Draft.from_instance(instance)
    target = _backbone_combine(instance)
    frame = min(i for i in target.inputs if instance.items[i].kind is ItemKind.RAW)
    generic = [r for r in draft.raws() if r != frame]
    backbone_modules = [i for i in target.inputs if instance.items[i].kind is ItemKind.MODULE]
    bound = {c.attribute: c for c in instance.constraints}
    new_modules = set()
    terminals = list(instance.generator.get("deceptive_combines", ()))

    def raw_inputs():
        raws = [generic[_randint(rng, 0, len(generic) - 1)] for _ in range(_randint(rng, 1, 2))]
        draft.inventory.extend(raws)
        return raws

    for _ in range(config.deceptive_branch_count):
        victim = backbone_modules[_randint(rng, 0, len(backbone_modules) - 1)]
        victim_attrs = draft.attrs(victim)
        final = [float(unit * lo - _randint(rng, 1, unit))]
        for k in range(1, dim):
            c = bound.get(k)
            if c is None:
                final.append(float(_randint(rng, 0, 4)))
            elif c.comparator == ">=":
                final.append(victim_attrs[k] + _randint(rng, 1, 2))
            else:
                final.append(victim_attrs[k] - _randint(rng, 1, 2))
        decoy = draft.produced(ItemKind.MODULE, RecipeKind.CRAFT, raw_inputs(), lo, final, rng)
        new_modules.add(decoy)
        if rng.random() < 0.5:
            upgraded = list(final)
            upgraded[0] = final[0] + unit * lo - 1
            new_modules.add(draft.produced(ItemKind.MODULE, RecipeKind.REFINE, [decoy], lo, upgraded, rng))
        parts = list(backbone_modules)
        parts[parts.index(victim)] = decoy
        chassis_final = [float(unit * target.cost)] + [float(_randint(rng, 0, 3)) for _ in range(1, dim)]
        draft.produced(ItemKind.INTERMEDIATE, RecipeKind.COMBINE, [frame] + parts, target.cost, chassis_final, rng)
        terminals.append(len(draft.recipes) - 1)
        draft.inventory.append(frame)

    for _ in range(config.distractor_modules):
        cost = _randint(rng, lo, hi)
        final = _module_profile(rng, dim, unit * cost - _randint(rng, 1, unit))
        new_modules.add(draft.produced(ItemKind.MODULE, RecipeKind.CRAFT, raw_inputs(), cost, final, rng))

    for _ in range(config.spare_raws):
        draft.inventory.append(generic[_randint(rng, 0, len(generic) - 1)])

    _add_synergies(draft, new_modules, rng, config.synergy_density, power_zero=False)
    return draft.freeze(instance, generator={**instance.generator, "deceptive_combines": terminals})


def deceptive_terminals(instance: Instance) -> list[Recipe]:
    """Combine recipes that end a deceptive branch."""
    return [instance.recipes[r] for r in instance.generator.get("deceptive_combines", ())]


def relabel(instance: Instance, plan: Plan, rng) -> tuple[Instance, Plan]:
    """Shuffle item and recipe ids so id order carries no hint of the backbone."""
    item_perm = [int(x) for x in rng.permutation(len(instance.items))]
    recipe_perm = [int(x) for x in rng.permutation(len(instance.recipes))]
    imap = {old: new for old, new in enumerate(item_perm)}
    rmap = {old: new for old, new in enumerate(recipe_perm)}
    items = sorted(
        (ItemSpec(imap[i.id], i.kind, i.base_attributes) for i in instance.items), key=lambda i: i.id
    )
    recipes = sorted(
        (Recipe(rmap[r.id], r.kind, tuple(imap[x] for x in r.inputs), imap[r.output], r.cost, r.effect)
         for r in instance.recipes),
        key=lambda r: r.id,
    )
    synergies = SynergyTable({(imap[a], imap[b]): v for (a, b), v in instance.synergies.items()})
    generator = dict(instance.generator)
    generator["deceptive_combines"] = sorted(rmap[r] for r in generator.get("deceptive_combines", ()))
    new_plan = Plan(tuple(replace(a, recipe=rmap[a.recipe]) for a in plan))
    return replace(
        instance,
        items=tuple(items),
        recipes=tuple(recipes),
        synergies=synergies,
        initial_inventory=tuple(sorted(imap[i] for i in instance.initial_inventory)),
        generator=generator,
    ), new_plan


def hidden_count(A: float, maskable: int) -> int:
    # Tolerance guards floor() against binary round-off such as 0.29 * 100.
    return min(maskable, math.floor(A * maskable + 1e-9))


def apply_ambiguity(instance: Instance, A: float, rng) -> Instance:
    """Hide floor(A * maskable) synergy values / recipe effects, chosen uniformly."""
    if not 0.0 <= A <= 1.0:
        raise ContractViolation(f"A must lie in [0, 1], got {A}")
    entries = [("synergy", p) for p in instance.synergies.pairs()] + [("effect", r.id) for r in instance.recipes]
    count = hidden_count(A, len(entries))
    chosen = sorted(int(i) for i in rng.choice(len(entries), size=count, replace=False)) if count else []
    pairs = frozenset(entries[i][1] for i in chosen if entries[i][0] == "synergy")
    effects = frozenset(entries[i][1] for i in chosen if entries[i][0] == "effect")
    return replace(instance, mask=AmbiguityMask(pairs, effects))


def min_production_costs(instance: Instance) -> dict:
    """Cheapest total recipe cost to obtain one copy of each item (raws cost 0)."""
    graph = {r.output: set(r.inputs) for r in instance.recipes}
    cost = {i.id: 0 for i in instance.items if i.kind is ItemKind.RAW}
    for item in graphlib.TopologicalSorter(graph).static_order():
        r = instance.producers.get(item)
        if r is not None:
            cost[item] = r.cost + sum(cost[i] for i in r.inputs)
    return cost


def horizon_certificate(instance: Instance) -> bool:
    """True when the power-per-cost bounds prove no plan below H can satisfy constraint 0."""
    unit = instance.generator.get("power_unit")
    if unit is None or not instance.constraints:
        return False
    first = instance.constraints[0]
    H = instance.difficulty.H
    if first.attribute != 0 or first.comparator != ">=" or first.threshold < unit * H:
        return False
    costs = min_production_costs(instance)
    attrs = instance.item_attributes
    for r in instance.recipes:
        power = attrs[r.output][0]
        if r.output in instance.module_ids:
            if power > unit * costs[r.output]:
                return False
        elif r.kind is RecipeKind.COMBINE:
            extra = sum(costs[i] for i in r.inputs if i not in instance.module_ids)
            if power > unit * (r.cost + extra):
                return False
    return all(v[0] <= 0 for _, v in instance.synergies.items())


def instance_name(level: int, seed: int) -> str:
    return f"ww-L{level}-{seed}"


def generate_with_backbone(seed: int, level: int, ladder: DifficultyLadder,
                           config: GeneratorConfig | None = None) -> tuple[Instance, Plan]:
    """Generate an instance and also return the backbone plan that solves it at cost H."""
    config = config or GeneratorConfig()
    if not 0 <= int(seed) < 2**64:
        raise GenerationConfigError(f"seed must be an unsigned 64-bit integer, got {seed}")
    delta = ladder[level]
    plan, instance = build_backbone(delta, config, substream(seed, level, "backbone"), seed=seed, level=level)
    instance = add_deception(instance, substream(seed, level, "deception"), config)
    instance, plan = relabel(instance, plan, substream(seed, level, "catalog"))
    instance = apply_ambiguity(instance, delta.A, substream(seed, level, "mask"))
    instance.validate()
    if not horizon_certificate(instance) or not is_acyclic(instance.recipes):
        raise AssertionError(f"generator broke its own horizon certificate for {instance.instance_id}")
    return instance, plan


def generate_instance(seed: int, level: int, ladder: DifficultyLadder,
                      config: GeneratorConfig | None = None) -> Instance:
    return generate_with_backbone(seed, level, ladder, config)[0]


def validate_instance(instance: Instance, cap: int, node_budget: Optional[int] = None) -> ValidationReport:
    """Run the oracle with a cost cap and report on the horizon guarantee."""
    H, B = instance.difficulty.H, instance.budget
    kwargs = {} if node_budget is None else {"node_budget": node_budget}
    try:
        found = uniform_cost_search(instance, cap, **kwargs)
    except NodeBudgetExceeded:
        return ValidationReport(EXCEEDED_CAP, False, None, None)
    if found is not None:
        return ValidationReport(found.cost, found.cost == H, found.cost < H, found.cost <= B)
    return ValidationReport(
        EXCEEDED_CAP,
        False,
        False if cap >= H - 1 else None,
        False if cap >= B else None,
    )
