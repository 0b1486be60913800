"""JSON wire formats for instances, plans and episode traces.

All documents are UTF-8 JSON written with sorted keys and carry a
``schema_version``. Item, recipe and module ids are integers; seeds are
decimal strings so consumers with 53-bit numbers do not truncate them.

Instance (``*.instance.json``)::

    {"schema_version": 1, "type": "instance", "instance_id": str, "seed": "123",
     "difficulty_level": int, "difficulty": {"H": int, "K": int, "C": int, "A": float},
     "attribute_dim": int, "attribute_names": [str, ...],
     "items": [{"id": int, "kind": "raw"|"intermediate"|"module", "base_attributes": [float, ...]}],
     "recipes": [{"id": int, "kind": "craft"|"refine"|"combine", "inputs": [int, ...],
                  "output": int, "cost": int, "effect": [float, ...]}],
     "synergies": [{"pair": [int, int], "value": [float, ...]}],
     "constraints": [{"attribute": int, "comparator": ">="|"<=", "threshold": float}],
     "budget": int, "initial_inventory": [int, ...],
     "mask": {"hidden_synergy_pairs": [[int, int], ...], "hidden_recipe_effects": [int, ...]},
     "generator": {...}}

Plan (``*.plan.json``)::

    {"schema_version": 1, "type": "plan", "actions": [action, ...]}

where an action is one of ``{"kind": "craft"|"combine", "recipe": int}``,
``{"kind": "refine", "recipe": int, "target": "inventory"|"artefact"}``,
``{"kind": "test", "pair": [int, int]}``, ``{"kind": "test", "recipe": int}`` or
``{"kind": "repair", "remove": int, "insert": int}``.

Trace (``*.trace.jsonl``): a header line
``{"schema_version": 1, "type": "trace", "instance_id": str}`` followed by one
``{"step": int, "action": action|null, "outcome": str, "steps_used": int}``
record per executed action.
"""

from __future__ import annotations

import json
from pathlib import Path

from .core import (
    ATTRIBUTE_NAMES,
    Action,
    AmbiguityMask,
    Constraint,
    DifficultyVector,
    Instance,
    ItemSpec,
    Plan,
    Recipe,
    SynergyTable,
)

SCHEMA_VERSION = 1


class SchemaError(ValueError):
    pass


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=1, ensure_ascii=False) + "\n"


def _check(data: dict, kind: str) -> None:
    if data.get("type") != kind:
        raise SchemaError(f"expected a {kind} document, got type={data.get('type')!r}")
    if data.get("schema_version") != SCHEMA_VERSION:
        raise SchemaError(f"unsupported schema_version {data.get('schema_version')!r}")


def instance_to_dict(instance: Instance) -> dict:
    d = instance.difficulty
    return {
        "schema_version": SCHEMA_VERSION,
        "type": "instance",
        "instance_id": instance.instance_id,
        "seed": str(instance.seed),
        "difficulty_level": instance.difficulty_level,
        "difficulty": {"H": d.H, "K": d.K, "C": d.C, "A": d.A},
        "attribute_dim": instance.attribute_dim,
        "attribute_names": list(ATTRIBUTE_NAMES[: instance.attribute_dim]),
        "items": [
            {"id": i.id, "kind": i.kind.value, "base_attributes": list(i.base_attributes)}
            for i in instance.items
        ],
        "recipes": [
            {"id": r.id, "kind": r.kind.value, "inputs": list(r.inputs), "output": r.output,
             "cost": r.cost, "effect": list(r.effect)}
            for r in instance.recipes
        ],
        "synergies": [{"pair": list(p), "value": list(v)} for p, v in instance.synergies.items()],
        "constraints": [
            {"attribute": c.attribute, "comparator": c.comparator, "threshold": c.threshold}
            for c in instance.constraints
        ],
        "budget": instance.budget,
        "initial_inventory": list(instance.initial_inventory),
        "mask": {
            "hidden_synergy_pairs": sorted(list(p) for p in instance.mask.hidden_synergy_pairs),
            "hidden_recipe_effects": sorted(instance.mask.hidden_recipe_effects),
        },
        "generator": instance.generator,
    }


def instance_from_dict(data: dict) -> Instance:
    _check(data, "instance")
    d = data["difficulty"]
    return Instance(
        instance_id=data["instance_id"],
        seed=int(data["seed"]),
        difficulty_level=data["difficulty_level"],
        difficulty=DifficultyVector(d["H"], d["K"], d["C"], d["A"]),
        attribute_dim=data["attribute_dim"],
        items=tuple(ItemSpec(i["id"], i["kind"], tuple(i["base_attributes"])) for i in data["items"]),
        recipes=tuple(
            Recipe(r["id"], r["kind"], tuple(r["inputs"]), r["output"], r["cost"], tuple(r["effect"]))
            for r in data["recipes"]
        ),
        synergies=SynergyTable({tuple(s["pair"]): tuple(s["value"]) for s in data["synergies"]}),
        constraints=tuple(
            Constraint(c["attribute"], c["comparator"], c["threshold"]) for c in data["constraints"]
        ),
        budget=data["budget"],
        initial_inventory=tuple(data["initial_inventory"]),
        mask=AmbiguityMask(
            frozenset(tuple(p) for p in data["mask"]["hidden_synergy_pairs"]),
            frozenset(data["mask"]["hidden_recipe_effects"]),
        ),
        generator=data.get("generator", {}),
    )


def dumps_instance(instance: Instance) -> str:
    return dumps(instance_to_dict(instance))


def loads_instance(text: str) -> Instance:
    return instance_from_dict(json.loads(text))


def plan_to_dict(plan: Plan) -> dict:
    return {"schema_version": SCHEMA_VERSION, "type": "plan", "actions": [a.to_dict() for a in plan]}


def plan_from_dict(data: dict) -> Plan:
    _check(data, "plan")
    return Plan(tuple(Action.from_dict(a) for a in data["actions"]))


def trace_lines(instance_id: str, result) -> list[str]:
    header = {"schema_version": SCHEMA_VERSION, "type": "trace", "instance_id": instance_id}
    lines = [json.dumps(header, sort_keys=True)]
    for i, record in enumerate(result.trace):
        lines.append(json.dumps(record.to_dict(i), sort_keys=True))
    return lines


def read_trace(path: Path) -> tuple[str, list[dict]]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    header = json.loads(lines[0])
    _check(header, "trace")
    return header["instance_id"], [json.loads(line) for line in lines[1:]]


def trace_plan(records: list[dict]) -> Plan:
    return Plan(tuple(Action.from_dict(r["action"]) for r in records if r["action"] is not None))
