from __future__ import annotations

import json

import pytest

from workshop_world.core import Action, Plan
from workshop_world.genesis import generate_instance
from workshop_world.schema import (
    SchemaError,
    dumps_instance,
    loads_instance,
    plan_from_dict,
    plan_to_dict,
    read_trace,
    trace_lines,
    trace_plan,
)
from workshop_world.sim import run_plan


def test_instance_roundtrip_is_lossless(ladder):
    inst = generate_instance(2**63 + 7, 4, ladder)
    text = dumps_instance(inst)
    back = loads_instance(text)
    assert back == inst
    assert dumps_instance(back) == text
    data = json.loads(text)
    assert data["schema_version"] == 1
    assert data["seed"] == str(2**63 + 7)
    assert data["mask"]["hidden_recipe_effects"] or data["mask"]["hidden_synergy_pairs"]


def test_wrong_document_type_is_rejected(ladder):
    data = json.loads(dumps_instance(generate_instance(1, 1, ladder)))
    data["schema_version"] = 99
    with pytest.raises(SchemaError):
        loads_instance(json.dumps(data))
    with pytest.raises(SchemaError):
        plan_from_dict({"type": "instance", "schema_version": 1})


def test_plan_roundtrip():
    plan = Plan((Action.craft(1), Action.refine(2, "artefact"), Action.test_synergy(3, 4), Action.repair(3, 5)))
    assert plan_from_dict(json.loads(json.dumps(plan_to_dict(plan)))) == plan


def test_trace_file_replays(tiny, tmp_path):
    plan = [Action.craft(0), Action.craft(1), Action.combine(3), Action.refine(2, "artefact")]
    result = run_plan(tiny, plan)
    path = tmp_path / "x.trace.jsonl"
    path.write_text("\n".join(trace_lines("tiny", result)) + "\n")
    instance_id, records = read_trace(path)
    assert instance_id == "tiny"
    assert [r["step"] for r in records] == [0, 1, 2, 3]
    assert run_plan(tiny, trace_plan(records)) == result
