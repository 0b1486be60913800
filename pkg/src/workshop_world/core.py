"""Domain types for Workshop World instances and plans.

Everything here is immutable. Attribute vectors are plain tuples of floats so
they hash, compare and serialize without ceremony.
"""

from __future__ import annotations

import graphlib
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Iterable, Mapping, Sequence

ATTRIBUTE_NAMES = ("power", "stability", "weight", "aesthetics")
DEFAULT_DIM = len(ATTRIBUTE_NAMES)

AttributeVector = tuple  # tuple[float, ...]


class ContractViolation(ValueError):
    """Raised when inputs break a documented precondition or type invariant."""


class InvalidAction(ValueError):
    """Raised for actions that reference unknown ids or cannot be applied."""


class ItemKind(str, Enum):
    RAW = "raw"
    INTERMEDIATE = "intermediate"
    MODULE = "module"


class RecipeKind(str, Enum):
    CRAFT = "craft"
    REFINE = "refine"
    COMBINE = "combine"


class ActionKind(str, Enum):
    CRAFT = "craft"
    REFINE = "refine"
    COMBINE = "combine"
    TEST = "test"
    REPAIR = "repair"


def vector(values: Iterable[float]) -> AttributeVector:
    out = tuple(float(v) for v in values)
    for v in out:
        if v != v or v in (float("inf"), float("-inf")):
            raise ContractViolation(f"attribute vector has non-finite entry: {out}")
    return out


def zeros(dim: int = DEFAULT_DIM) -> AttributeVector:
    return (0.0,) * dim


def add_vectors(a: AttributeVector, b: AttributeVector) -> AttributeVector:
    if len(a) != len(b):
        raise ContractViolation(f"dimension mismatch: {len(a)} vs {len(b)}")
    return tuple(x + y for x, y in zip(a, b))


def pair_key(a: int, b: int) -> tuple[int, int]:
    return (a, b) if a <= b else (b, a)


@dataclass(frozen=True)
class ItemSpec:
    id: int
    kind: ItemKind
    base_attributes: AttributeVector

    def __post_init__(self):
        object.__setattr__(self, "kind", ItemKind(self.kind))
        object.__setattr__(self, "base_attributes", vector(self.base_attributes))


@dataclass(frozen=True)
class Recipe:
    id: int
    kind: RecipeKind
    inputs: tuple  # sorted multiset of item ids
    output: int
    cost: int
    effect: AttributeVector

    def __post_init__(self):
        object.__setattr__(self, "kind", RecipeKind(self.kind))
        object.__setattr__(self, "inputs", tuple(sorted(int(i) for i in self.inputs)))
        object.__setattr__(self, "effect", vector(self.effect))
        if self.cost < 1:
            raise ContractViolation(f"recipe {self.id}: cost must be >= 1, got {self.cost}")
        n = len(self.inputs)
        if self.kind is RecipeKind.CRAFT and n < 1:
            raise ContractViolation(f"craft recipe {self.id} needs at least one input")
        if self.kind is RecipeKind.REFINE and n != 1:
            raise ContractViolation(f"refine recipe {self.id} needs exactly one input")
        if self.kind is RecipeKind.COMBINE and n < 2:
            raise ContractViolation(f"combine recipe {self.id} needs at least two inputs")


class SynergyTable:
    """Symmetric map from unordered module pairs to synergy vectors.

    Missing pairs mean zero synergy; self-pairs are rejected.
    """

    __slots__ = ("_entries",)

    def __init__(self, entries: Mapping | Iterable = ()):
        items = entries.items() if isinstance(entries, Mapping) else entries
        table = {}
        for (a, b), vec in items:
            if a == b:
                raise ContractViolation(f"synergy self-pair ({a}, {a}) is not allowed")
            key = pair_key(int(a), int(b))
            if key in table:
                raise ContractViolation(f"duplicate synergy entry for {key}")
            table[key] = vector(vec)
        self._entries = dict(sorted(table.items()))

    def get(self, a: int, b: int) -> AttributeVector | None:
        if a == b:
            return None
        return self._entries.get(pair_key(a, b))

    def pairs(self) -> list[tuple[int, int]]:
        return list(self._entries)

    def items(self):
        return self._entries.items()

    def __contains__(self, pair) -> bool:
        return pair_key(*pair) in self._entries

    def __len__(self) -> int:
        return len(self._entries)

    def __eq__(self, other) -> bool:
        return isinstance(other, SynergyTable) and self._entries == other._entries

    def __repr__(self) -> str:
        return f"SynergyTable({self._entries!r})"


@dataclass(frozen=True)
class Constraint:
    attribute: int
    comparator: str  # ">=" or "<="
    threshold: float

    def __post_init__(self):
        if self.comparator not in (">=", "<="):
            raise ContractViolation(f"unknown comparator {self.comparator!r}")
        object.__setattr__(self, "threshold", float(self.threshold))

    def holds(self, attrs: AttributeVector) -> bool:
        value = attrs[self.attribute]
        if self.comparator == ">=":
            return value >= self.threshold
        return value <= self.threshold

    def deficit(self, attrs: AttributeVector) -> float:
        value = attrs[self.attribute]
        if self.comparator == ">=":
            return max(0.0, self.threshold - value)
        return max(0.0, value - self.threshold)


@dataclass(frozen=True)
class DifficultyVector:
    H: int
    K: int
    C: int
    A: float

    def __post_init__(self):
        object.__setattr__(self, "A", float(self.A))
        if self.H < 1:
            raise ContractViolation(f"H must be >= 1, got {self.H}")
        if self.K < 0 or self.C < 0:
            raise ContractViolation("K and C must be non-negative")
        if not 0.0 <= self.A <= 1.0:
            raise ContractViolation(f"A must lie in [0, 1], got {self.A}")

    def as_tuple(self) -> tuple:
        return (self.H, self.K, self.C, self.A)

    def dominates(self, other: DifficultyVector) -> bool:
        """Componentwise >= with at least one strict component."""
        a, b = self.as_tuple(), other.as_tuple()
        return all(x >= y for x, y in zip(a, b)) and a != b


@dataclass(frozen=True)
class DifficultyLadder:
    """Totally ordered difficulty levels, addressed 1..L."""

    levels: tuple

    def __post_init__(self):
        levels = tuple(self.levels)
        if not levels:
            raise ContractViolation("difficulty ladder needs at least one level")
        for lo, hi in zip(levels, levels[1:]):
            if not hi.dominates(lo):
                raise ContractViolation(
                    f"ladder not strictly increasing: {lo.as_tuple()} -> {hi.as_tuple()}"
                )
        object.__setattr__(self, "levels", levels)

    def __len__(self) -> int:
        return len(self.levels)

    def __getitem__(self, level: int) -> DifficultyVector:
        if not 1 <= level <= len(self.levels):
            raise ContractViolation(f"level {level} outside 1..{len(self.levels)}")
        return self.levels[level - 1]

    @classmethod
    def from_tuples(cls, rows: Iterable[Sequence]) -> DifficultyLadder:
        return cls(tuple(DifficultyVector(*row) for row in rows))


def mask_key_synergy(a: int, b: int) -> tuple:
    return ("synergy",) + pair_key(a, b)


def mask_key_effect(recipe_id: int) -> tuple:
    return ("effect", recipe_id)


@dataclass(frozen=True)
class AmbiguityMask:
    hidden_synergy_pairs: frozenset = frozenset()
    hidden_recipe_effects: frozenset = frozenset()

    def __post_init__(self):
        object.__setattr__(
            self,
            "hidden_synergy_pairs",
            frozenset(pair_key(a, b) for a, b in self.hidden_synergy_pairs),
        )
        object.__setattr__(self, "hidden_recipe_effects", frozenset(self.hidden_recipe_effects))

    def keys(self) -> frozenset:
        return frozenset(
            [mask_key_synergy(a, b) for a, b in self.hidden_synergy_pairs]
            + [mask_key_effect(r) for r in self.hidden_recipe_effects]
        )

    def __len__(self) -> int:
        return len(self.hidden_synergy_pairs) + len(self.hidden_recipe_effects)


@dataclass(frozen=True)
class Instance:
    instance_id: str
    seed: int
    difficulty_level: int
    difficulty: DifficultyVector
    attribute_dim: int
    items: tuple
    recipes: tuple
    synergies: SynergyTable
    constraints: tuple
    budget: int
    initial_inventory: tuple
    mask: AmbiguityMask = field(default_factory=AmbiguityMask)
    generator: Mapping = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "items", tuple(self.items))
        object.__setattr__(self, "recipes", tuple(self.recipes))
        object.__setattr__(self, "constraints", tuple(self.constraints))
        object.__setattr__(self, "initial_inventory", tuple(sorted(self.initial_inventory)))

    # Derived lookups. Safe to cache because the dataclass is frozen.

    @cached_property
    def producers(self) -> dict:
        """item id -> the unique recipe producing it."""
        return {r.output: r for r in self.recipes}

    @cached_property
    def module_ids(self) -> frozenset:
        return frozenset(i.id for i in self.items if i.kind is ItemKind.MODULE)

    @cached_property
    def item_attributes(self) -> tuple:
        """Attributes of every item as it exists in an inventory.

        Raw items carry their base attributes; produced items carry base plus
        the effect of their producing recipe.
        """
        out = []
        for item in self.items:
            recipe = self.producers.get(item.id)
            if recipe is None:
                out.append(item.base_attributes)
            else:
                out.append(add_vectors(item.base_attributes, recipe.effect))
        return tuple(out)

    @property
    def maskable_count(self) -> int:
        return len(self.synergies) + len(self.recipes)

    def recipe(self, recipe_id: int) -> Recipe:
        if not isinstance(recipe_id, int) or not 0 <= recipe_id < len(self.recipes):
            raise InvalidAction(f"unknown recipe id {recipe_id!r}")
        return self.recipes[recipe_id]

    def item(self, item_id: int) -> ItemSpec:
        if not isinstance(item_id, int) or not 0 <= item_id < len(self.items):
            raise InvalidAction(f"unknown item id {item_id!r}")
        return self.items[item_id]

    def validate(self) -> None:
        """Check every structural invariant; raise ContractViolation on the first failure."""
        d = self.attribute_dim
        for idx, item in enumerate(self.items):
            if item.id != idx:
                raise ContractViolation(f"item ids must be dense; position {idx} has id {item.id}")
            if len(item.base_attributes) != d:
                raise ContractViolation(f"item {idx} has attribute dimension {len(item.base_attributes)}")
        n_items = len(self.items)
        outputs = set()
        combine_outputs = set()
        for idx, r in enumerate(self.recipes):
            if r.id != idx:
                raise ContractViolation(f"recipe ids must be dense; position {idx} has id {r.id}")
            if len(r.effect) != d:
                raise ContractViolation(f"recipe {idx} effect has wrong dimension")
            for i in r.inputs + (r.output,):
                if not 0 <= i < n_items:
                    raise ContractViolation(f"recipe {idx} references unknown item {i}")
            if r.output in outputs:
                raise ContractViolation(f"item {r.output} has more than one producing recipe")
            outputs.add(r.output)
            if self.items[r.output].kind is ItemKind.RAW:
                raise ContractViolation(f"recipe {idx} produces raw item {r.output}")
            if r.kind is RecipeKind.CRAFT and any(
                self.items[i].kind is not ItemKind.RAW for i in r.inputs
            ):
                raise ContractViolation(f"craft recipe {idx} has a non-raw input")
            if r.kind is RecipeKind.COMBINE:
                combine_outputs.add(r.output)
        for item in self.items:
            if item.kind is not ItemKind.RAW and item.id not in outputs:
                raise ContractViolation(f"non-raw item {item.id} has no producing recipe")
        for r in self.recipes:
            if combine_outputs.intersection(r.inputs):
                raise ContractViolation(f"recipe {r.id} consumes an assembled artefact")
        if not is_acyclic(self.recipes):
            raise ContractViolation("recipe hypergraph contains a cycle")
        for (a, b), vec in self.synergies.items():
            if a not in self.module_ids or b not in self.module_ids:
                raise ContractViolation(f"synergy pair ({a}, {b}) is not a module pair")
            if len(vec) != d:
                raise ContractViolation(f"synergy ({a}, {b}) has wrong dimension")
        for c in self.constraints:
            if not 0 <= c.attribute < d:
                raise ContractViolation(f"constraint attribute {c.attribute} outside [0, {d})")
        if len(self.constraints) != self.difficulty.K:
            raise ContractViolation(
                f"{len(self.constraints)} constraints but difficulty K={self.difficulty.K}"
            )
        if self.difficulty.C > len(self.module_ids):
            raise ContractViolation("C exceeds the number of module items")
        if self.budget < self.difficulty.H:
            raise ContractViolation(f"budget {self.budget} below horizon {self.difficulty.H}")
        for i in self.initial_inventory:
            if not 0 <= i < n_items or self.items[i].kind is not ItemKind.RAW:
                raise ContractViolation(f"initial inventory holds non-raw item {i}")
        for a, b in self.mask.hidden_synergy_pairs:
            if (a, b) not in self.synergies:
                raise ContractViolation(f"mask hides absent synergy pair ({a}, {b})")
        for rid in self.mask.hidden_recipe_effects:
            if not 0 <= rid < len(self.recipes):
                raise ContractViolation(f"mask hides unknown recipe {rid}")


def is_acyclic(recipes: Iterable[Recipe]) -> bool:
    """True when no item is its own ancestor in the recipe hypergraph."""
    graph: dict = {}
    for r in recipes:
        graph.setdefault(r.output, set()).update(r.inputs)
    try:
        tuple(graphlib.TopologicalSorter(graph).static_order())
    except graphlib.CycleError:
        return False
    return True


@dataclass(frozen=True)
class Action:
    """One plan step.

    ``target`` selects what a Refine works on: an inventory item or a module
    inside the current artefact. ``pair`` names a synergy probe for Test;
    a Test with ``recipe`` set probes that recipe's effect instead.
    """

    kind: ActionKind
    recipe: int | None = None
    target: str = "inventory"
    pair: tuple | None = None
    remove: int | None = None
    insert: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", ActionKind(self.kind))
        if self.pair is not None:
            object.__setattr__(self, "pair", tuple(self.pair))
        if self.target not in ("inventory", "artefact"):
            raise ContractViolation(f"unknown refine target {self.target!r}")

    @classmethod
    def craft(cls, recipe: int) -> Action:
        return cls(ActionKind.CRAFT, recipe=recipe)

    @classmethod
    def refine(cls, recipe: int, target: str = "inventory") -> Action:
        return cls(ActionKind.REFINE, recipe=recipe, target=target)

    @classmethod
    def combine(cls, recipe: int) -> Action:
        return cls(ActionKind.COMBINE, recipe=recipe)

    @classmethod
    def test_synergy(cls, a: int, b: int) -> Action:
        return cls(ActionKind.TEST, pair=(a, b))

    @classmethod
    def test_effect(cls, recipe: int) -> Action:
        return cls(ActionKind.TEST, recipe=recipe)

    @classmethod
    def repair(cls, remove: int, insert: int) -> Action:
        return cls(ActionKind.REPAIR, remove=remove, insert=insert)

    def to_dict(self) -> dict:
        out: dict = {"kind": self.kind.value}
        if self.kind is ActionKind.TEST:
            if self.pair is not None:
                out["pair"] = list(self.pair)
            else:
                out["recipe"] = self.recipe
        elif self.kind is ActionKind.REPAIR:
            out["remove"] = self.remove
            out["insert"] = self.insert
        else:
            out["recipe"] = self.recipe
            if self.kind is ActionKind.REFINE:
                out["target"] = self.target
        return out

    @classmethod
    def from_dict(cls, data: Mapping) -> Action:
        try:
            kind = ActionKind(data["kind"])
        except (KeyError, ValueError, TypeError) as exc:
            raise InvalidAction(f"malformed action {data!r}") from exc
        try:
            if kind is ActionKind.TEST:
                if "pair" in data:
                    a, b = data["pair"]
                    return cls.test_synergy(_as_int(a), _as_int(b))
                return cls.test_effect(_as_int(data["recipe"]))
            if kind is ActionKind.REPAIR:
                return cls.repair(_as_int(data["remove"]), _as_int(data["insert"]))
            if kind is ActionKind.REFINE:
                return cls.refine(_as_int(data["recipe"]), data.get("target", "inventory"))
            return cls(kind, recipe=_as_int(data["recipe"]))
        except (KeyError, ValueError, TypeError, ContractViolation) as exc:
            raise InvalidAction(f"malformed action {data!r}") from exc

    def sort_key(self) -> tuple:
        """Total order used for deterministic tie-breaking: canonical serialization."""
        return _ACTION_ORDER[self.kind], self.recipe if self.recipe is not None else -1, \
            self.target, self.pair or (), self.remove if self.remove is not None else -1, \
            self.insert if self.insert is not None else -1

    def symbol(self) -> str:
        return _SKELETON_SYMBOL[self.kind]


_ACTION_ORDER = {
    ActionKind.CRAFT: 0,
    ActionKind.REFINE: 1,
    ActionKind.COMBINE: 2,
    ActionKind.REPAIR: 3,
    ActionKind.TEST: 4,
}

_SKELETON_SYMBOL = {
    ActionKind.CRAFT: "c",
    ActionKind.REFINE: "r",
    ActionKind.COMBINE: "m",
    ActionKind.TEST: "t",
    ActionKind.REPAIR: "p",
}


def _as_int(value) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise TypeError(f"expected integer id, got {value!r}")
    return value


@dataclass(frozen=True)
class Plan:
    actions: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "actions", tuple(self.actions))

    def __len__(self) -> int:
        return len(self.actions)

    def __iter__(self):
        return iter(self.actions)

    def cost(self, instance: Instance) -> int:
        return sum(action_cost(a, instance.recipes) for a in self.actions)


def aggregate_attributes(
    part_modules: Sequence[int],
    part_attrs: Sequence[AttributeVector],
    base: AttributeVector,
    synergies: SynergyTable,
) -> AttributeVector:
    """Additive aggregation plus one synergy term per distinct module pair.

    Duplicate modules contribute their attributes once per copy but never pair
    with themselves.
    """
    if len(part_modules) != len(part_attrs):
        raise ContractViolation("part_modules and part_attrs differ in length")
    d = len(base)
    total = list(base)
    for vec in part_attrs:
        if len(vec) != d:
            raise ContractViolation(f"dimension mismatch: part has {len(vec)}, base has {d}")
        for k in range(d):
            total[k] += vec[k]
    distinct = sorted(set(part_modules))
    for i, a in enumerate(distinct):
        for b in distinct[i + 1:]:
            syn = synergies.get(a, b)
            if syn is None:
                continue
            if len(syn) != d:
                raise ContractViolation("synergy vector dimension mismatch")
            for k in range(d):
                total[k] += syn[k]
    return tuple(total)


def check_constraints(
    attrs: AttributeVector,
    distinct_modules: int,
    constraints: Sequence[Constraint],
    C: int,
) -> bool:
    return distinct_modules >= C and all(c.holds(attrs) for c in constraints)


def action_cost(action: Action, recipes: Sequence[Recipe]) -> int:
    """Recipe actions cost the recipe's cost; Test and Repair cost one step."""
    if action.kind in (ActionKind.TEST, ActionKind.REPAIR):
        if action.kind is ActionKind.TEST and action.pair is None:
            if action.recipe is None or not 0 <= action.recipe < len(recipes):
                raise InvalidAction(f"test probes unknown recipe {action.recipe!r}")
        return 1
    if action.recipe is None or not 0 <= action.recipe < len(recipes):
        raise InvalidAction(f"unknown recipe id {action.recipe!r}")
    recipe = recipes[action.recipe]
    if recipe.kind.value != action.kind.value:
        raise InvalidAction(
            f"{action.kind.value} action references {recipe.kind.value} recipe {recipe.id}"
        )
    return recipe.cost
