"""Complete EF2X for (inf, 1)-bounded additive valuations.

Keeps a partial EFX allocation in which every agent envied in the
threshold-1 view holds only goods relevant to itself. After each rule the
envy cycles of that view are resolved. Rule precedence is 1 -> 4; when no
rule applies, at most floor(n/2) - 1 goods remain and each lands on a
distinct envied agent holding a single good.
"""

from __future__ import annotations

from .. import graph, kernels
from ..core import relevant_set
from ..errors import InvariantViolated
from ..fairness import check_alpha_efx, check_named_property
from ..framework import (
    NOT_APPLIED,
    RuleOutcome,
    State,
    most_envious_agent,
    resolve_envy_cycles_traced,
)

TAG = "cxxra"


def _finish(state: State, alloc, agents, goods, **notes) -> RuleOutcome:
    alloc, cycles = resolve_envy_cycles_traced(state.instance, alloc)
    notes["cycles"] = cycles
    return RuleOutcome(True, state.with_allocation(alloc), tuple(agents), tuple(goods), notes)


def _view(state: State):
    G = graph.build(state.instance, state.allocation)
    sources, comps = graph.sources_and_components(G, 1)
    return G, sources, comps


def rule1(state: State) -> RuleOutcome:
    """Some agent prefers a single pool good to its whole bundle: swap."""
    inst, alloc = state.instance, state.allocation
    if not alloc.pool:
        return NOT_APPLIED
    sums = kernels.bundle_stats(inst, alloc)[0]
    pool = sorted(alloc.pool)
    for i in range(inst.num_agents):
        row = inst.table[i]
        for g in pool:
            if row[g] > sums[i][i]:
                new = alloc.replace({i: {g}}, (alloc.pool - {g}) | alloc.bundles[i])
                return _finish(state, new, [i], [g])
    return NOT_APPLIED


def rule2(state: State) -> RuleOutcome:
    """A source takes a relevant pool good and drops its irrelevant goods."""
    inst, alloc = state.instance, state.allocation
    if not alloc.pool:
        return NOT_APPLIED
    _, sources, _ = _view(state)
    for s in sources:
        rel = relevant_set(inst, alloc.pool, s)
        if rel:
            g = min(rel)
            grown = alloc.bundles[s] | {g}
            keep = relevant_set(inst, grown, s)
            new = alloc.replace({s: keep}, (alloc.pool - {g}) | (grown - keep))
            return _finish(state, new, [s], [g])
    return NOT_APPLIED


def rule3(state: State) -> RuleOutcome:
    """A source absorbs a pool good when nobody would envy the result."""
    inst, alloc = state.instance, state.allocation
    if not alloc.pool:
        return NOT_APPLIED
    _, sources, _ = _view(state)
    sums = kernels.bundle_stats(inst, alloc)[0]
    n = inst.num_agents
    for s in sources:
        for g in sorted(alloc.pool):
            if all(
                sums[j][s] + inst.table[j][g] <= sums[j][j] for j in range(n) if j != s
            ):
                new = alloc.replace({s: alloc.bundles[s] | {g}}, alloc.pool - {g})
                return _finish(state, new, [s], [g])
    return NOT_APPLIED


def _bearer_cycle(order, succ):
    """First cycle of the partial map `succ` found walking from `order`."""
    for start in order:
        walk, pos = [], {}
        v = start
        while v in succ and v not in pos:
            pos[v] = len(walk)
            walk.append(v)
            v = succ[v]
        if v in pos:
            return walk[pos[v]:]
    return None


def rule4(state: State) -> RuleOutcome:
    """Shift bundles along a cycle through several components.

    Pool goods go, lowest first, to sources whose component has at least
    two agents and then to the other sources. Each augmented source bundle
    points at the source whose component holds its most envious agent; a
    cycle of that map gives the shift. On the cycle, the most envious agent
    t inside C(s) takes its minimal envied subset, and every agent on the
    path s ~> t takes its successor's bundle.
    """
    inst, alloc = state.instance, state.allocation
    if not alloc.pool:
        return NOT_APPLIED
    G, sources, comps = _view(state)
    big = [s for s in sources if len(comps[s]) >= 2]
    order = big + [s for s in sources if len(comps[s]) < 2]
    pool = sorted(alloc.pool)
    bearers = order[: len(pool)]
    good_of = {s: pool[k] for k, s in enumerate(bearers)}
    comp_of = {a: s for s, members in comps.items() for a in members}
    target = {}
    for s in bearers:
        found = most_envious_agent(inst, alloc, alloc.bundles[s] | {good_of[s]})
        if found is None:
            raise InvariantViolated(f"rule 3 inapplicable yet nobody envies X_{s} + g{good_of[s]}")
        target[s] = found
    succ = {s: comp_of[t] for s, (t, _) in target.items() if comp_of[t] in good_of}
    cycle = _bearer_cycle(bearers, succ)
    if cycle is None:
        return NOT_APPLIED

    adj = {a: [] for a in G.agents}
    for i, j in sorted(graph.threshold_view(G, 1)):
        adj[i].append(j)
    changes = {}
    pool_set = set(alloc.pool)
    paths = []
    for k, giver in enumerate(cycle):
        s = cycle[(k + 1) % len(cycle)]
        t, subset = target[giver]
        path = graph.shortest_path(adj, s, t)
        if path is None or not set(path) <= comps[s]:
            raise InvariantViolated(f"no path {s} ~> {t} inside its component")
        paths.append(tuple(path))
        for a, b in zip(path, path[1:]):
            changes[a] = alloc.bundles[b]
        changes[t] = subset
        augmented = alloc.bundles[giver] | {good_of[giver]}
        pool_set.discard(good_of[giver])
        pool_set |= augmented - subset
    new = alloc.replace(changes, pool_set)
    touched = sorted(changes)
    goods = sorted(good_of[s] for s in cycle)
    return _finish(state, new, touched, goods, sources=tuple(cycle), paths=tuple(paths))


RULES = (("rule1", rule1), ("rule2", rule2), ("rule3", rule3), ("rule4", rule4))


def final(state: State):
    """Leftover pool goods go to distinct envied agents of large components."""
    inst, alloc = state.instance, state.allocation
    n = inst.num_agents
    pool = sorted(alloc.pool)
    if not pool:
        return alloc
    _, sources, comps = _view(state)
    big = [s for s in sources if len(comps[s]) >= 2]
    if len(pool) > n // 2 - 1 or len(pool) >= len(big):
        raise InvariantViolated(
            f"{len(pool)} goods left with {len(big)} large components and n = {n}"
        )
    changes = {}
    for g, s in zip(pool, big):
        j = min(comps[s] - {s})
        if len(alloc.bundles[j]) != 1:
            raise InvariantViolated(f"receiver {j} holds {len(alloc.bundles[j])} goods")
        changes[j] = alloc.bundles[j] | {g}
    return alloc.replace(changes, frozenset())


def audit(name: str, before: State, out: RuleOutcome) -> None:
    inst, alloc = out.state.instance, out.state.allocation
    rep = check_alpha_efx(inst, alloc, 1)
    if not rep.passed:
        raise InvariantViolated(f"{name} broke EFX: {rep.violations[:3]}")
    rep = check_named_property(inst, alloc, "ddagger")
    if not rep.passed:
        raise InvariantViolated(f"{name} broke the envied-holds-relevant property: {rep.violations[:3]}")
    G = graph.build(inst, alloc)
    if graph.find_cycle(G.agents, graph.threshold_view(G, 1)) is not None:
        raise InvariantViolated(f"{name} left an envy cycle")
