"""Example external agent: plans once with the package's own search, then replays.

Speaks the newline-delimited JSON protocol on stdin/stdout. It keeps no
state between episodes; the harness starts a fresh process each time.
"""

import json
import sys

from workshop_world.agents import believed_instance, state_from
from workshop_world.oracle import uniform_cost_search
from workshop_world.sim import Observation, Artefact


def to_observation(d: dict) -> Observation:
    art = d["artefact"]
    return Observation(
        attribute_dim=d["attribute_dim"],
        items=tuple(tuple(x.items()) for x in d["items"]),
        recipes=tuple(tuple(x.items()) for x in d["recipes"]),
        synergies=tuple(tuple(x.items()) for x in d["synergies"]),
        constraints=tuple(tuple(x.items()) for x in d["constraints"]),
        required_modules=d["required_modules"],
        budget=d["budget"],
        budget_remaining=d["budget_remaining"],
        inventory=tuple(d["inventory"]),
        artefact=None if art is None else Artefact(art["chassis"], tuple(art["modules"])),
        revealed=tuple(tuple(x.items()) for x in d["revealed"]),
    )


def main() -> None:
    plan = None
    for line in sys.stdin:
        msg = json.loads(line)
        if msg["type"] == "end":
            break
        obs = to_observation(msg["observation"])
        if plan is None:
            found = uniform_cost_search(believed_instance(obs), obs.budget_remaining, 20000, start=state_from(obs))
            plan = [] if found is None else [a.to_dict() for a in found.plan]
        reply = {"type": "action", "action": plan.pop(0)} if plan else {"type": "submit"}
        print(json.dumps(reply), flush=True)


if __name__ == "__main__":
    main()
