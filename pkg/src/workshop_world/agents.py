"""Baseline planners and the external-agent adapter.

Every built-in agent plans over the *visible* model reconstructed from its
observation: hidden recipe effects and synergy values count as zero until a
Test reveals them. Agents keep no state across episodes; the harness calls
``start`` with a fresh episode seed before each attempt.
"""

from __future__ import annotations

import json
import logging
import os
import queue
import subprocess
import threading
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .core import (
    Action,
    Constraint,
    DifficultyVector,
    Instance,
    InvalidAction,
    ItemSpec,
    Recipe,
    RecipeKind,
    SynergyTable,
    pair_key,
    zeros,
)
from .oracle import NodeBudgetExceeded, Transitions, uniform_cost_search
from .sim import SUBMIT, UNKNOWN, Artefact, Observation, SimState, artefact_attributes, step

logger = logging.getLogger(__name__)

AGENT_KINDS = ("random", "greedy", "beam", "budgeted", "external")
DEFAULT_TIMEOUT = 30.0
SEED_ENV = "WW_AGENT_SEED"


class AgentConfigError(ValueError):
    pass


class AgentProtocolError(InvalidAction):
    """An external agent timed out, crashed or sent a malformed message."""


@dataclass(frozen=True)
class AgentSpec:
    """One evaluated system snapshot.

    ``knob`` is the capability setting: beam width for ``beam``, node budget
    for ``budgeted`` (None = unlimited); unused by other kinds.
    """

    kind: str
    phase_label: str = "t1"
    phase_time: float = 1.0
    knob: Optional[int] = None
    seed: int = 0
    command: tuple = ()
    timeout: float = DEFAULT_TIMEOUT
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.kind not in AGENT_KINDS:
            raise AgentConfigError(f"unknown agent kind {self.kind!r}; expected one of {AGENT_KINDS}")
        object.__setattr__(self, "command", tuple(self.command))
        if self.kind == "beam" and (self.knob is None or self.knob < 1):
            raise AgentConfigError("beam agents need a width >= 1")
        if self.kind == "budgeted" and self.knob is not None and self.knob < 0:
            raise AgentConfigError("node budget must be >= 0")
        if self.kind == "external" and not self.command:
            raise AgentConfigError("external agents need a command")

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "phase_label": self.phase_label,
            "phase_time": self.phase_time,
            "knob": self.knob,
            "seed": self.seed,
            "command": list(self.command),
            "timeout": self.timeout,
            "metadata": dict(self.metadata),
        }

    @classmethod
    def from_dict(cls, data: dict) -> AgentSpec:
        return cls(**{k: v for k, v in data.items() if k in cls.__dataclass_fields__})


def phase_sequence(kind: str, schedule: Sequence, *, seed: int = 0, command: Sequence[str] = (),
                   timeout: float = DEFAULT_TIMEOUT) -> list[AgentSpec]:
    """Label a monotone capability schedule as phases t1..tn at times 1..n."""
    schedule = list(schedule)
    if not schedule:
        raise AgentConfigError("schedule must name at least one phase")
    for a, b in zip(schedule, schedule[1:]):
        if _knob_rank(b) < _knob_rank(a):
            raise AgentConfigError(f"schedule is not monotone: {a!r} then {b!r}")
    return [
        AgentSpec(kind, f"t{i}", float(i), knob, seed, tuple(command), timeout)
        for i, knob in enumerate(schedule, start=1)
    ]


def _knob_rank(knob) -> float:
    return float("inf") if knob is None else float(knob)


# Visible model -------------------------------------------------------------


def believed_instance(obs: Observation) -> Instance:
    """Instance built from what the observation shows; unknowns become zero."""
    dim = obs.attribute_dim
    revealed_effects = {}
    revealed_pairs = {}
    for entry in obs.revealed:
        e = dict(entry)
        if "recipe" in e:
            revealed_effects[e["recipe"]] = tuple(e["effect"])
        else:
            revealed_pairs[pair_key(*e["pair"])] = tuple(e["value"])
    items = tuple(ItemSpec(d["id"], d["kind"], tuple(d["base_attributes"])) for d in map(dict, obs.items))
    recipes = []
    for d in map(dict, obs.recipes):
        effect = d["effect"]
        if effect == UNKNOWN:
            effect = revealed_effects.get(d["id"], zeros(dim))
        recipes.append(Recipe(d["id"], d["kind"], tuple(d["inputs"]), d["output"], d["cost"], tuple(effect)))
    synergies = {}
    for d in map(dict, obs.synergies):
        key = pair_key(*d["pair"])
        value = d["value"]
        if value == UNKNOWN:
            value = revealed_pairs.get(key)
        if value is not None:
            synergies[key] = tuple(value)
    constraints = tuple(
        Constraint(d["attribute"], d["comparator"], d["threshold"]) for d in map(dict, obs.constraints)
    )
    return Instance(
        instance_id="visible",
        seed=0,
        difficulty_level=0,
        difficulty=DifficultyVector(1, len(constraints), obs.required_modules, 0.0),
        attribute_dim=dim,
        items=items,
        recipes=tuple(recipes),
        synergies=SynergyTable(synergies),
        constraints=constraints,
        budget=obs.budget,
        initial_inventory=(),
    )


def hidden_keys(obs: Observation) -> list[tuple]:
    """Mask entries still unknown to the agent, in canonical order."""
    out = [("effect", dict(r)["id"]) for r in obs.recipes if dict(r)["effect"] == UNKNOWN]
    out += [("synergy",) + pair_key(*dict(s)["pair"]) for s in obs.synergies if dict(s)["value"] == UNKNOWN]
    revealed = set()
    for entry in obs.revealed:
        e = dict(entry)
        revealed.add(("effect", e["recipe"]) if "recipe" in e else ("synergy",) + pair_key(*e["pair"]))
    return sorted(k for k in out if k not in revealed)


def test_action(key: tuple) -> Action:
    if key[0] == "effect":
        return Action.test_effect(key[1])
    return Action.test_synergy(key[1], key[2])


def probe_order(keys, model: Instance) -> list[tuple]:
    """Unknowns ranked for probing: combine effects, module effects, other effects, synergies."""
    def rank(key):
        if key[0] == "synergy":
            return (3, key)
        recipe = model.recipe(key[1])
        if recipe.kind is RecipeKind.COMBINE:
            return (0, key)
        if recipe.output in model.module_ids:
            return (1, key)
        return (2, key)
    return sorted(keys, key=rank)


def state_from(obs: Observation) -> SimState:
    return SimState(
        inventory=tuple(obs.inventory),
        artefact=obs.artefact,
        steps_used=obs.budget - obs.budget_remaining,
    )


def deficit(key: tuple, model: Instance) -> float:
    """Total constraint shortfall of a canonical state's artefact, plus missing modules."""
    art = key[1]
    if art is None:
        attrs, distinct = zeros(model.attribute_dim), 0
    else:
        artefact = Artefact(*art)
        attrs, distinct = artefact_attributes(artefact, model), artefact.distinct_modules
    total = sum(c.deficit(attrs) for c in model.constraints)
    return total + max(0, model.difficulty.C - distinct)


def artefact_dependencies(artefact: Artefact, model: Instance) -> set:
    """Mask keys whose values feed into this artefact's attributes."""
    deps = {("effect", model.producers[artefact.chassis].id)}
    for m in set(artefact.modules):
        deps.add(("effect", model.producers[m].id))
    mods = sorted(set(artefact.modules))
    for i, a in enumerate(mods):
        for b in mods[i + 1:]:
            deps.add(("synergy", a, b))
    return deps


# Agents --------------------------------------------------------------------


class Agent:
    def __init__(self, spec: AgentSpec):
        self.spec = spec

    def start(self, episode_seed: int) -> None:
        pass

    def act(self, obs: Observation):
        raise NotImplementedError

    def close(self) -> None:
        pass

    def __call__(self, obs: Observation):
        return self.act(obs)


class _ModelCache:
    def __init__(self):
        self._key = None
        self._model = None
        self._tr = None

    def get(self, obs: Observation) -> tuple[Instance, Transitions]:
        key = obs.revealed
        if self._model is None or key != self._key:
            self._model = believed_instance(obs)
            self._tr = Transitions(self._model)
            self._key = key
        return self._model, self._tr


class RandomAgent(Agent):
    """Uniformly random legal actions (including probes of hidden parameters)."""

    def start(self, episode_seed: int) -> None:
        ss = np.random.SeedSequence([int(self.spec.seed), int(episode_seed)])
        self._rng = np.random.Generator(np.random.PCG64(ss))
        self._cache = _ModelCache()

    def act(self, obs: Observation):
        model, tr = self._cache.get(obs)
        key = _key(obs)
        if deficit(key, model) == 0:
            return SUBMIT
        remaining = obs.budget_remaining
        legal = [a for a, _, c in tr.successors(key) if c <= remaining]
        if remaining >= 1:
            legal += [test_action(k) for k in hidden_keys(obs)]
        if not legal:
            return SUBMIT
        return legal[int(self._rng.integers(len(legal)))]


class GreedyAgent(Agent):
    """One-step lookahead on total constraint deficit; ties go to the lowest action."""

    def start(self, episode_seed: int) -> None:
        self._cache = _ModelCache()

    def act(self, obs: Observation):
        model, tr = self._cache.get(obs)
        key = _key(obs)
        if deficit(key, model) == 0:
            return SUBMIT
        best = None
        for action, nxt, c in tr.successors(key):
            if c > obs.budget_remaining:
                continue
            score = (deficit(nxt, model), action.sort_key())
            if best is None or score < best[0]:
                best = (score, action)
        return SUBMIT if best is None else best[1]


class BeamAgent(Agent):
    """Re-plans every step with a width-limited beam over the visible model."""

    def start(self, episode_seed: int) -> None:
        self._cache = _ModelCache()

    def act(self, obs: Observation):
        model, tr = self._cache.get(obs)
        root = _key(obs)
        root_deficit = deficit(root, model)
        if root_deficit == 0:
            return SUBMIT
        width = self.spec.knob
        # Beam entries: (deficit, cost, action-key path, first action, state key).
        beam = [(root_deficit, 0, (), None, root)]
        best = None
        seen = {root}
        while beam:
            layer = []
            for _, cost, path, first, key in beam:
                for action, nxt, c in tr.successors(key):
                    if cost + c > obs.budget_remaining or nxt in seen:
                        continue
                    seen.add(nxt)
                    entry = (deficit(nxt, model), cost + c, path + (action.sort_key(),),
                             first or action, nxt)
                    layer.append(entry)
            layer.sort(key=lambda e: e[:3])
            beam = layer[:width]
            if beam and (best is None or beam[0][:3] < best[:3]):
                best = beam[0]
            if best is not None and best[0] == 0:
                break
        if best is None or best[0] >= root_deficit:
            return SUBMIT
        return best[3]


class BudgetedExhaustiveAgent(Agent):
    """Uniform-cost search over the visible model with a node budget.

    The agent searches from its current state with the remaining budget as the
    cost cap. Before executing a plan it Tests every hidden parameter the
    plan's final artefact depends on, re-planning after each revelation. When
    the zero-filled belief admits no plan at all it probes an unknown instead
    (see ``probe_order``). A search that exhausts its node budget ends the
    attempt with a submit.
    Because expansion order is deterministic, any search that succeeds under
    budget n returns the same plan under every larger budget, so solved
    instances at n stay solved at larger n.
    """

    def start(self, episode_seed: int) -> None:
        self._cache = _ModelCache()
        self._plan: list[Action] = []
        self.expanded = 0

    def act(self, obs: Observation):
        if self._plan:
            return self._plan.pop(0)
        model, _ = self._cache.get(obs)
        state = state_from(obs)
        try:
            found = uniform_cost_search(model, obs.budget_remaining, self.spec.knob, start=state)
        except NodeBudgetExceeded as exc:
            self.expanded += exc.expanded
            return SUBMIT
        if found is None:
            # The zero-filled belief admits no solution in budget; spend a step
            # revealing the most promising unknown and try again.
            unknown = probe_order(hidden_keys(obs), model)
            if unknown and obs.budget_remaining > 0:
                return test_action(unknown[0])
            return SUBMIT
        self.expanded += found.expanded
        if not found.plan.actions:
            return SUBMIT
        final = _final_artefact(found.plan, state, model)
        unknown = set(hidden_keys(obs))
        pending = sorted(artefact_dependencies(final, model) & unknown) if final else []
        if pending:
            return test_action(pending[0])
        self._plan = list(found.plan.actions)
        return self._plan.pop(0)


def _key(obs: Observation) -> tuple:
    art = obs.artefact
    return (tuple(obs.inventory), None if art is None else (art.chassis, art.modules))


def _final_artefact(plan, state: SimState, model: Instance) -> Optional[Artefact]:
    for action in plan:
        state, _ = step(state, action, model)
    return state.artefact


class ExternalAgent(Agent):
    """Child process speaking newline-delimited JSON over stdin/stdout.

    Harness -> agent: ``{"type": "observe", "observation": {...}}``.
    Agent -> harness: ``{"type": "action", "action": {...}}`` or ``{"type": "submit"}``.
    At episode end the harness sends ``{"type": "end"}`` and closes stdin.
    """

    def start(self, episode_seed: int) -> None:
        env = dict(os.environ)
        env[SEED_ENV] = str(self.spec.seed)
        try:
            self._proc = subprocess.Popen(
                list(self.spec.command),
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=subprocess.DEVNULL,
                env=env,
                text=True,
                bufsize=1,
            )
        except OSError as exc:
            raise AgentConfigError(f"cannot launch external agent {self.spec.command!r}: {exc}") from exc
        self._lines: queue.Queue = queue.Queue()
        threading.Thread(target=self._pump, daemon=True).start()

    def _pump(self) -> None:
        for line in self._proc.stdout:
            self._lines.put(line)
        self._lines.put(None)

    def _send(self, message: dict) -> None:
        try:
            self._proc.stdin.write(json.dumps(message, sort_keys=True) + "\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError, ValueError) as exc:
            raise AgentProtocolError(f"agent stdin closed: {exc}") from exc

    protocol_errors = 0

    def act(self, obs: Observation):
        try:
            return self._exchange(obs)
        except AgentProtocolError as exc:
            self.protocol_errors += 1
            logger.warning("external agent protocol error: %s", exc)
            raise

    def _exchange(self, obs: Observation):
        self._send({"type": "observe", "observation": obs.to_dict()})
        try:
            line = self._lines.get(timeout=self.spec.timeout)
        except queue.Empty:
            raise AgentProtocolError(f"agent did not answer within {self.spec.timeout} s") from None
        if line is None:
            raise AgentProtocolError("agent exited before answering")
        try:
            msg = json.loads(line)
        except json.JSONDecodeError as exc:
            raise AgentProtocolError(f"malformed agent reply {line!r}") from exc
        if not isinstance(msg, dict):
            raise AgentProtocolError(f"malformed agent reply {line!r}")
        if msg.get("type") == "submit":
            return SUBMIT
        if msg.get("type") == "action" and isinstance(msg.get("action"), dict):
            try:
                return Action.from_dict(msg["action"])
            except InvalidAction as exc:
                raise AgentProtocolError(str(exc)) from exc
        raise AgentProtocolError(f"unexpected agent message {msg!r}")

    def close(self) -> None:
        proc = getattr(self, "_proc", None)
        if proc is None:
            return
        try:
            self._send({"type": "end"})
        except AgentProtocolError:
            pass
        try:
            proc.stdin.close()
        except OSError:
            pass
        try:
            proc.wait(timeout=self.spec.timeout)
        except subprocess.TimeoutExpired:
            proc.kill()
            proc.wait()
        self._proc = None


_AGENTS = {
    "random": RandomAgent,
    "greedy": GreedyAgent,
    "beam": BeamAgent,
    "budgeted": BudgetedExhaustiveAgent,
    "external": ExternalAgent,
}


def make_agent(spec: AgentSpec) -> Agent:
    return _AGENTS[spec.kind](spec)


def act(agent: Agent, observation: Observation):
    """One decision: an Action or SUBMIT."""
    return agent.act(observation)
