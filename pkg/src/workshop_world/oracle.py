"""Exhaustive ground-truth solving over small instances.

The search runs on true parameter values (no masking, no Test actions) over
canonical states: a sorted inventory multiset plus the artefact's chassis and
sorted module multiset. Cost-so-far is tracked by the frontier, not the key.
"""

from __future__ import annotations

import heapq
from collections import Counter
from dataclasses import dataclass
from typing import Iterator, Optional

from .core import Action, Instance, Plan, RecipeKind, check_constraints, zeros
from .sim import Artefact, SimState, artefact_attributes, init_state

DEFAULT_NODE_BUDGET = 10_000_000


class NodeBudgetExceeded(RuntimeError):
    """The search hit its node budget before it could prove an answer."""

    def __init__(self, expanded: int):
        super().__init__(f"node budget exhausted after {expanded} expansions")
        self.expanded = expanded


def canonical(state: SimState) -> tuple:
    art = state.artefact
    return (state.inventory, None if art is None else (art.chassis, art.modules))


class Transitions:
    """Successor generation and goal tests over canonical states of one instance."""

    def __init__(self, instance: Instance):
        self.instance = instance
        self.modules = instance.module_ids
        recipes = sorted(instance.recipes, key=lambda r: r.id)
        self.crafts = [r for r in recipes if r.kind is RecipeKind.CRAFT]
        self.refines = [r for r in recipes if r.kind is RecipeKind.REFINE]
        self.combines = [r for r in recipes if r.kind is RecipeKind.COMBINE]
        self._needs = {r.id: Counter(r.inputs) for r in recipes}
        self._goal_cache: dict = {}
        self._zero_ok = check_constraints(
            zeros(instance.attribute_dim), 0, instance.constraints, instance.difficulty.C
        )

    def is_goal(self, key: tuple) -> bool:
        art = key[1]
        if art is None:
            return self._zero_ok
        hit = self._goal_cache.get(art)
        if hit is None:
            artefact = Artefact(*art)
            attrs = artefact_attributes(artefact, self.instance)
            hit = check_constraints(
                attrs, artefact.distinct_modules, self.instance.constraints, self.instance.difficulty.C
            )
            self._goal_cache[art] = hit
        return hit

    def successors(self, key: tuple) -> Iterator[tuple[Action, tuple, int]]:
        """Yield (action, next key, cost) in canonical action order."""
        inventory, art = key
        have = Counter(inventory)

        def available(r) -> bool:
            return all(have[i] >= n for i, n in self._needs[r.id].items())

        def consume(r) -> tuple:
            pool = list(inventory)
            for i in r.inputs:
                pool.remove(i)
            return pool

        for r in self.crafts:
            if available(r):
                pool = consume(r)
                pool.append(r.output)
                yield Action.craft(r.id), (tuple(sorted(pool)), art), r.cost
        for r in self.refines:
            # "artefact" sorts before "inventory" in the canonical action order.
            if art is not None and r.inputs[0] in art[1] and r.output in self.modules:
                mods = list(art[1])
                mods.remove(r.inputs[0])
                mods.append(r.output)
                yield Action.refine(r.id, "artefact"), (inventory, (art[0], tuple(sorted(mods)))), r.cost
            if available(r):
                pool = consume(r)
                pool.append(r.output)
                yield Action.refine(r.id), (tuple(sorted(pool)), art), r.cost
        for r in self.combines:
            if available(r):
                pool = consume(r)
                mods = tuple(i for i in r.inputs if i in self.modules)
                yield Action.combine(r.id), (tuple(pool), (r.output, mods)), r.cost
        if art is not None:
            spare = sorted(set(i for i in inventory if i in self.modules))
            for a in sorted(set(art[1])):
                for b in spare:
                    if a == b:
                        continue
                    pool = list(inventory)
                    pool.remove(b)
                    pool.append(a)
                    mods = list(art[1])
                    mods.remove(a)
                    mods.append(b)
                    yield Action.repair(a, b), (tuple(sorted(pool)), (art[0], tuple(sorted(mods)))), 1


@dataclass(frozen=True)
class SearchResult:
    plan: Plan
    cost: int
    expanded: int


def uniform_cost_search(
    instance: Instance,
    cap: int,
    node_budget: Optional[int] = DEFAULT_NODE_BUDGET,
    start: Optional[SimState] = None,
    dedup: bool = True,
) -> Optional[SearchResult]:
    """Cheapest plan (cost <= cap) reaching a constraint-satisfying state.

    Returns None when no such plan exists. Raises NodeBudgetExceeded if more
    than ``node_budget`` states would have to be expanded. Expansion order is
    fully deterministic, so a larger budget always expands a superset of the
    nodes a smaller one did.
    """
    if cap < 0:
        return None
    tr = Transitions(instance)
    root = canonical(start if start is not None else init_state(instance))
    # Node table: parallel lists keep memory low for large frontiers.
    keys = [root]
    parents = [-1]
    actions: list = [None]
    best = {root: 0}
    heap = [(0, 0)]
    expanded = 0
    while heap:
        cost, node = heapq.heappop(heap)
        key = keys[node]
        if dedup:
            if best.get(key, cost) < cost:
                continue
        if tr.is_goal(key):
            plan = []
            while parents[node] != -1:
                plan.append(actions[node])
                node = parents[node]
            return SearchResult(Plan(reversed(plan)), cost, expanded)
        if dedup:
            best[key] = -1  # closed
        expanded += 1
        if node_budget is not None and expanded > node_budget:
            raise NodeBudgetExceeded(expanded - 1)
        for action, nxt, step_cost in tr.successors(key):
            new_cost = cost + step_cost
            if new_cost > cap:
                continue
            if dedup:
                seen = best.get(nxt)
                if seen is not None and (seen == -1 or seen <= new_cost):
                    continue
                best[nxt] = new_cost
            keys.append(nxt)
            parents.append(node)
            actions.append(action)
            heapq.heappush(heap, (new_cost, len(keys) - 1))
    return None


def solve_min_steps(
    instance: Instance, cap: int, node_budget: Optional[int] = DEFAULT_NODE_BUDGET
) -> Optional[tuple[Plan, int]]:
    """Minimum-cost solving plan with cost <= cap, or None if there is none."""
    found = uniform_cost_search(instance, cap, node_budget)
    if found is None:
        return None
    return found.plan, found.cost


def enumerate_solutions(instance: Instance, cap: int, max_count: int) -> list[Plan]:
    """Distinct solving plans of cost <= cap, cheapest first.

    Iterative deepening on total cost; within one cost the plans come out in
    lexicographic canonical action order. A plan stops at the first state that
    satisfies every constraint, so no solution is a padded copy of another.
    """
    tr = Transitions(instance)
    root = canonical(init_state(instance))
    out: list[Plan] = []

    def dfs(key, remaining, prefix):
        if len(out) >= max_count:
            return
        if tr.is_goal(key):
            if remaining == 0:
                out.append(Plan(tuple(prefix)))
            return
        if remaining == 0:
            return
        for action, nxt, c in tr.successors(key):
            if c <= remaining:
                prefix.append(action)
                dfs(nxt, remaining - c, prefix)
                prefix.pop()
                if len(out) >= max_count:
                    return

    for budget in range(0, cap + 1):
        dfs(root, budget, [])
        if len(out) >= max_count:
            break
    return out[:max_count]
