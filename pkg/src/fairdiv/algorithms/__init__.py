"""Algorithm drivers: class checks, seeding, the rule loop and lifting.

Agents removed by the Hall reduction during seeding keep their single
prematched good; the chosen algorithm runs on the sub-instance of the
remaining agents and goods, and its result is mapped back.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable

from ..core import Allocation, Instance, check_restricted_additive, classify_bounds
from ..errors import ClassMismatch, DegenerateInstance, InvariantViolated
from ..fairness import FairnessReport, check_alpha_efx, check_ef2x
from ..core import SQRT2
from ..framework import SeedResult, State, Trace, run_loop, seed_allocation
from . import cxxra, pqrax, sqrt2_pq, sqrt2_ra


def _require_q1(instance: Instance) -> Instance:
    prof = classify_bounds(instance)
    if prof.q > 1:
        raise ClassMismatch(f"needs (inf,1)-bounded values; instance is ({prof.p},{prof.q})-bounded")
    return instance


def _require_restricted(instance: Instance) -> Instance:
    try:
        cert = check_restricted_additive(instance)
    except DegenerateInstance as exc:
        raise ClassMismatch(str(exc)) from None
    if cert is None:
        raise ClassMismatch("needs restricted additive values")
    return instance if instance.restricted is not None else instance.with_restricted(cert)


def _require_restricted_p2(instance: Instance) -> Instance:
    instance = _require_restricted(instance)
    prof = classify_bounds(instance)
    if prof.p > 2:
        raise ClassMismatch(f"needs every good relevant to at most 2 agents; found {prof.p}")
    return instance


@dataclass(frozen=True)
class Algorithm:
    name: str
    module: object
    prepare: Callable[[Instance], Instance]
    claim: str
    verify: Callable[[Instance, Allocation], FairnessReport]
    tracks_remaining: bool = False


ALGORITHMS = {
    "cxxra": Algorithm("cxxra", cxxra, _require_q1, "ef2x", check_ef2x),
    "sqrt2-ra": Algorithm(
        "sqrt2-ra", sqrt2_ra, _require_restricted, "efx-sqrt2", lambda i, a: check_alpha_efx(i, a, SQRT2)
    ),
    "sqrt2-pq": Algorithm(
        "sqrt2-pq", sqrt2_pq, _require_q1, "efx-sqrt2", lambda i, a: check_alpha_efx(i, a, SQRT2)
    ),
    "pqrax": Algorithm(
        "pqrax", pqrax, _require_restricted_p2, "efx", lambda i, a: check_alpha_efx(i, a, 1), True
    ),
}


@dataclass
class RunResult:
    algorithm: str
    allocation: Allocation
    trace: Trace
    seed: SeedResult
    working: Instance
    agent_map: tuple[int, ...]
    good_map: tuple[int, ...]
    pre_final_pool: int
    start: Allocation | None = None  # seeded working allocation, before any rule

    def trace_jsonl(self) -> str:
        """Trace lines with agent and good ids of the input instance."""
        lines = []
        for e in self.trace.entries:
            rec = e.to_json()
            rec["agents"] = [self.agent_map[a] for a in rec["agents"]]
            rec["goods"] = [self.good_map[g] for g in rec["goods"]]
            lines.append(json.dumps(rec, separators=(",", ":")) + "\n")
        return "".join(lines)


def _working_state(algo: Algorithm, instance: Instance, seed: SeedResult):
    agents = tuple(seed.surviving_agents())
    goods = tuple(g for g in range(instance.num_goods) if g not in seed.removed_goods)
    work = instance.restrict(agents, goods)
    gpos = {g: k for k, g in enumerate(goods)}
    start = Allocation(
        frozenset(gpos[g] for g in seed.allocation.pool if g in gpos),
        tuple(frozenset(gpos[g] for g in seed.allocation.bundles[a]) for a in agents),
    )
    remaining = frozenset(range(len(agents))) if algo.tracks_remaining else None
    return State(work, start, remaining), agents, goods


def _lift(instance: Instance, seed: SeedResult, agents, goods, final: Allocation) -> Allocation:
    bundles = list(seed.allocation.bundles)
    for k, a in enumerate(agents):
        bundles[a] = frozenset(goods[g] for g in final.bundles[k])
    pool = {goods[g] for g in final.pool}
    if pool and not agents and instance.num_agents:
        # Every agent sits in a Hall-deficient set; leftover goods are worth
        # nothing to anyone and go to an agent that received nothing.
        empty = [a for a in range(instance.num_agents) if not bundles[a]]
        target = empty[0] if empty else 0
        bundles[target] = bundles[target] | pool
        pool = set()
    return Allocation(frozenset(pool), tuple(bundles))


def run(instance: Instance, name: str, *, audit: bool = True, limit: int | None = None) -> RunResult:
    """Run algorithm `name` on `instance`.

    Raises ClassMismatch for instances outside the algorithm's class and
    InvariantViolated (or a subclass) when an internal check fails.
    """
    algo = ALGORITHMS[name]
    instance = algo.prepare(instance)
    seed = seed_allocation(instance)
    state, agents, goods = _working_state(algo, instance, seed)
    mod = algo.module
    if agents:
        final, trace = run_loop(
            state, mod.RULES, mod.final, mod.TAG, audit=mod.audit if audit else None, limit=limit
        )
        pre_final = len(trace.pre_final.pool)
    else:
        final, trace, pre_final = state.allocation, Trace(), len(state.allocation.pool)
    lifted = _lift(instance, seed, agents, goods, final)
    if instance.num_agents and not lifted.complete:
        raise InvariantViolated("result is not complete")
    return RunResult(name, lifted, trace, seed, state.instance, agents, goods, pre_final, state.allocation)


def replay(instance: Instance, name: str, rules: list[str]) -> Allocation:
    """Re-apply a recorded rule sequence from the seed and run the final step."""
    algo = ALGORITHMS[name]
    instance = algo.prepare(instance)
    seed = seed_allocation(instance)
    state, agents, goods = _working_state(algo, instance, seed)
    table = dict(algo.module.RULES)
    for rule in rules:
        out = table[rule](state)
        if not out.applied:
            raise InvariantViolated(f"replayed {rule} is not applicable")
        state = out.state
    final = algo.module.final(state) if agents else state.allocation
    return _lift(instance, seed, agents, goods, final)


__all__ = ["ALGORITHMS", "RunResult", "run", "replay"]
