"""Shared sub-procedures and the generic rule loop."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Sequence

from . import graph, kernels
from .core import SQRT2, Allocation, Instance, assert_partition, beta_lt, relevant_set, scaled_value
from .errors import Infeasible, InvariantViolated, PotentialNotIncreased, StepLimitExceeded
from .fairness import Potential, potential

STEP_LIMIT_ENV = "FAIRDIV_STEP_LIMIT"


# ------------------------------------------------------------------ seeding

@dataclass(frozen=True)
class SeedResult:
    allocation: Allocation
    prematched: tuple[tuple[int, int], ...]
    removed_agents: frozenset[int]
    removed_goods: frozenset[int]

    def surviving_agents(self) -> list[int]:
        return [i for i in range(len(self.allocation.bundles)) if i not in self.removed_agents]


def _max_matching(rel: Sequence[frozenset[int]], agents: Sequence[int], goods: frozenset[int]) -> dict[int, int]:
    """Agent -> good maximum matching by augmenting paths (Kuhn)."""
    owner: dict[int, int] = {}

    def augment(a: int, seen: set[int]) -> bool:
        for g in sorted(rel[a] & goods):
            if g in seen:
                continue
            seen.add(g)
            if g not in owner or augment(owner[g], seen):
                owner[g] = a
                return True
        return False

    for a in agents:
        augment(a, set())
    return {a: g for g, a in owner.items()}


def _deficient_set(rel, agents, goods, match) -> tuple[set[int], set[int]]:
    """Agents and goods reachable by alternating paths from unmatched agents."""
    holder = {g: a for a, g in match.items()}
    za = {a for a in agents if a not in match}
    zg: set[int] = set()
    stack = sorted(za)
    while stack:
        a = stack.pop()
        for g in rel[a] & goods:
            if g in zg:
                continue
            zg.add(g)
            b = holder[g]
            if b not in za:
                za.add(b)
                stack.append(b)
    return za, zg


def seed_allocation(instance: Instance) -> SeedResult:
    """One relevant good per agent with no super-unit cycle.

    When no perfect matching of agents to relevant goods exists, a Hall
    deficient set N_c is found; its matched goods M[N_c] are handed out
    inside N_c, both sets are removed, and the rest is seeded again.
    """
    n, m = instance.num_agents, instance.num_goods
    rel = instance.relevant_goods
    agents = list(range(n))
    goods = frozenset(range(m))
    prematched: list[tuple[int, int]] = []
    removed_a: set[int] = set()
    removed_g: set[int] = set()
    while True:
        match = _max_matching(rel, agents, goods)
        if len(match) == len(agents):
            break
        za, zg = _deficient_set(rel, agents, goods, match)
        for a in sorted(za):
            if a in match:
                prematched.append((a, match[a]))
        removed_a |= za
        removed_g |= zg
        agents = [a for a in agents if a not in za]
        goods = goods - zg

    bundles = [frozenset() for _ in range(n)]
    for a, g in prematched:
        bundles[a] = frozenset({g})
    for a, g in match.items():
        bundles[a] = frozenset({g})
    used = {g for b in bundles for g in b}
    alloc = Allocation(frozenset(range(m)) - used, tuple(bundles))

    # Rotate goods along super-unit cycles among surviving agents. Each
    # rotation strictly raises the product of their values.
    while agents:
        G = graph.build(instance, alloc, agents)
        cyc = graph.super_unit_cycle(G)
        if cyc is None:
            break
        alloc = rotate(alloc, cyc)
    return SeedResult(alloc, tuple(sorted(prematched)), frozenset(removed_a), frozenset(removed_g))


def rotate(alloc: Allocation, cycle: Sequence[int]) -> Allocation:
    """Each agent on the cycle takes its successor's bundle."""
    cycle = list(cycle)
    changes = {a: alloc.bundles[b] for a, b in zip(cycle, cycle[1:] + cycle[:1])}
    return alloc.replace(changes)


# ----------------------------------------------------------- envy handling

def resolve_envy_cycles_traced(instance: Instance, alloc: Allocation, agents=None):
    """Like resolve_envy_cycles, also returning the cycles it resolved."""
    cycles = []
    while True:
        G = graph.build(instance, alloc, agents)
        cyc = graph.find_cycle(G.agents, graph.threshold_view(G, 1))
        if cyc is None:
            return alloc, cycles
        cycles.append(cyc)
        pool = set(alloc.pool)
        changes = {}
        for a, b in zip(cyc, cyc[1:] + cyc[:1]):
            keep = relevant_set(instance, alloc.bundles[b], a)
            changes[a] = keep
            pool |= alloc.bundles[b] - keep
        alloc = alloc.replace(changes, pool)


def resolve_envy_cycles(instance: Instance, alloc: Allocation) -> Allocation:
    """Break every cycle of the threshold-1 envy view.

    Along a cycle edge i -> j, agent i takes the goods of X_j relevant to
    it and the rest of X_j goes to the pool.
    """
    return resolve_envy_cycles_traced(instance, alloc)[0]


def _strong_envy_move(instance: Instance, alloc: Allocation, beta) -> tuple[int, int, int] | None:
    sums, mins, _, counts = kernels.bundle_stats(instance, alloc)
    n = instance.num_agents
    table = instance.table
    for i in range(n):
        a = sums[i][i]
        for j in range(n):
            if j == i or counts[j] < 2 or not beta_lt(beta, a, sums[i][j] - mins[i][j]):
                continue
            for g in sorted(alloc.bundles[j]):
                if beta_lt(beta, a, sums[i][j] - table[i][g]):
                    return i, j, g
    return None


def envy_elimination(
    instance: Instance,
    alloc: Allocation,
    observer: Callable[[Allocation, tuple[int, int, int]], None] | None = None,
) -> Allocation:
    """Move single goods to the pool until nobody sqrt(2)-strongly envies.

    The pair (i, j) with the lowest indices is handled first and the
    lowest-indexed good g of X_j with sqrt(2) v_i(X_i) < v_i(X_j - g) moves.
    `observer` sees every intermediate allocation.
    """
    while True:
        move = _strong_envy_move(instance, alloc, SQRT2)
        if move is None:
            return alloc
        _, j, g = move
        alloc = alloc.replace({j: alloc.bundles[j] - {g}}, alloc.pool | {g})
        if observer is not None:
            observer(alloc, move)


# ------------------------------------------------------- minimal subsets

def _shrink(goods: Iterable[int], envied: Callable[[list[int]], bool]) -> list[int]:
    cur = sorted(goods)
    changed = True
    while changed:
        changed = False
        for g in list(cur):
            rest = [h for h in cur if h != g]
            if envied(rest):
                cur = rest
                changed = True
    return cur


def most_envious_agent(
    instance: Instance,
    alloc: Allocation,
    S: Iterable[int],
    thresholds: Mapping[int, Fraction] | None = None,
) -> tuple[int, frozenset[int]] | None:
    """An agent envying an inclusion-minimal envied subset of S.

    By default agent i envies T when v_i(T) > v_i(X_i); `thresholds`
    replaces v_i(X_i) (and restricts the agents considered), which gives
    virtual envy when virtual values are passed.
    """
    scale = instance.scale
    if thresholds is None:
        limits = {i: Fraction(scaled_value(instance, i, b)) for i, b in enumerate(alloc.bundles)}
    else:
        limits = {i: t * scale for i, t in thresholds.items()}
    order = sorted(limits)

    def enviers(T) -> list[int]:
        return [i for i in order if scaled_value(instance, i, T) > limits[i]]

    S = sorted(S)
    if not enviers(S):
        return None
    final = _shrink(S, lambda T: bool(enviers(T)))
    return enviers(final)[0], frozenset(final)


def minimal_subset_exceeding(instance: Instance, i: int, S: Iterable[int], threshold: Fraction) -> frozenset[int]:
    """Inclusion-minimal T within S with v_i(T) > threshold."""
    limit = Fraction(threshold) * instance.scale
    S = sorted(S)
    if scaled_value(instance, i, S) <= limit:
        raise Infeasible(f"v_{i}(S) does not exceed {threshold}")
    return frozenset(_shrink(S, lambda T: scaled_value(instance, i, T) > limit))


# -------------------------------------------------------------- rule loop

@dataclass(frozen=True)
class State:
    instance: Instance
    allocation: Allocation
    remaining: frozenset[int] | None = None

    @property
    def satisfied(self) -> dict[int, frozenset[int]]:
        if self.remaining is None:
            return {}
        return {
            i: b for i, b in enumerate(self.allocation.bundles) if i not in self.remaining
        }

    def with_allocation(self, alloc: Allocation, remaining=None) -> "State":
        return State(self.instance, alloc, self.remaining if remaining is None else frozenset(remaining))


@dataclass
class RuleOutcome:
    applied: bool
    state: State | None = None
    agents: tuple[int, ...] = ()
    goods: tuple[int, ...] = ()
    annotations: dict = field(default_factory=dict)

    @property
    def allocation(self) -> Allocation | None:
        return None if self.state is None else self.state.allocation


NOT_APPLIED = RuleOutcome(False)


@dataclass(frozen=True)
class TraceEntry:
    step: int
    rule: str
    agents: tuple[int, ...]
    goods: tuple[int, ...]
    phi: Potential
    allocation: Allocation = field(compare=False, repr=False)
    annotations: dict = field(default_factory=dict, compare=False, repr=False)

    def to_json(self) -> dict:
        return {
            "step": self.step,
            "rule": self.rule,
            "agents": list(self.agents),
            "goods": list(self.goods),
            "phi": self.phi.strings(),
        }


@dataclass
class Trace:
    entries: list[TraceEntry] = field(default_factory=list)
    pre_final: Allocation | None = None

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def to_jsonl(self) -> str:
        return "".join(json.dumps(e.to_json(), separators=(",", ":")) + "\n" for e in self.entries)

    def rule_counts(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for e in self.entries:
            out[e.rule] = out.get(e.rule, 0) + 1
        return out


def default_step_limit(instance: Instance) -> int:
    bits = max((v.bit_length() for row in instance.table for v in row), default=0)
    return 16 * max(1, instance.num_agents) * max(1, instance.num_goods) * (1 + bits)


def step_limit(instance: Instance) -> int:
    env = os.environ.get(STEP_LIMIT_ENV)
    if env:
        return int(env)
    return default_step_limit(instance)


def state_potential(state: State, tag: str) -> Potential:
    ctx = {} if state.remaining is None else {"remaining": sorted(state.remaining)}
    return potential(state.instance, state.allocation, tag, ctx)


Rule = Callable[[State], RuleOutcome]


def run_loop(
    state: State,
    rules: Sequence[tuple[str, Rule]],
    final_step: Callable[[State], Allocation],
    potential_tag: str,
    *,
    audit: Callable[[str, State, RuleOutcome], None] | None = None,
    limit: int | None = None,
) -> tuple[Allocation, Trace]:
    """Apply the first applicable rule until none applies, then finish.

    Every application must strictly raise the potential named by
    `potential_tag`; anything else is an implementation bug and raises.
    """
    limit = step_limit(state.instance) if limit is None else limit
    phi = state_potential(state, potential_tag)
    trace = Trace()
    step = 0
    while True:
        for name, rule in rules:
            out = rule(state)
            if out.applied:
                break
        else:
            break
        if step >= limit:
            raise StepLimitExceeded(f"more than {limit} rule applications")
        assert_partition(out.state.allocation, state.instance.num_goods)
        new_phi = state_potential(out.state, potential_tag)
        if not phi < new_phi:
            raise PotentialNotIncreased(f"{name}: {phi.strings()} -> {new_phi.strings()}")
        if audit is not None:
            audit(name, state, out)
        trace.entries.append(
            TraceEntry(step, name, out.agents, out.goods, new_phi, out.state.allocation, out.annotations)
        )
        state, phi = out.state, new_phi
        step += 1
    trace.pre_final = state.allocation
    final = final_step(state)
    assert_partition(final, state.instance.num_goods)
    if not final.complete:
        raise InvariantViolated("final step left goods in the pool")
    return final, trace
