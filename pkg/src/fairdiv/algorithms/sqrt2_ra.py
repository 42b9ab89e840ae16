"""sqrt(2)/2-EFX for restricted additive valuations.

Every bundle stays fully relevant to its owner, so the sqrt(2) envy view is
acyclic. Rules grow sources of that view; envy elimination after each rule
restores sqrt(2)/2-EFX. The potential is the ascending vector of source
bundle values, closed by an infinite sentinel.
"""

from __future__ import annotations

from .. import graph, kernels
from ..core import SQRT2, inherent_value, relevant_set
from ..errors import InvariantViolated
from ..fairness import check_alpha_efx, check_named_property, potential
from ..framework import NOT_APPLIED, RuleOutcome, State, envy_elimination

TAG = "sources"


def _view(state: State):
    G = graph.build(state.instance, state.allocation)
    sources, comps = graph.sources_and_components(G, SQRT2)
    return G, sources, comps


def _eliminate(state: State, alloc, agents, goods, **notes) -> RuleOutcome:
    inst = state.instance
    moves = []
    last = [potential(inst, alloc, TAG)]

    def observe(a, move):
        phi = potential(inst, a, TAG)
        if phi < last[0]:
            raise InvariantViolated(f"elimination lowered the potential: {last[0].strings()} -> {phi.strings()}")
        last[0] = phi
        moves.append((move, phi))

    notes["elimination_start"] = last[0]
    alloc = envy_elimination(inst, alloc, observe)
    notes["elimination"] = moves
    return RuleOutcome(True, state.with_allocation(alloc), tuple(agents), tuple(goods), notes)


def rule1(state: State) -> RuleOutcome:
    """A source of the sqrt(2) view takes a relevant pool good."""
    inst, alloc = state.instance, state.allocation
    if not alloc.pool:
        return NOT_APPLIED
    _, sources, _ = _view(state)
    for s in sources:
        rel = relevant_set(inst, alloc.pool, s)
        if rel:
            g = min(rel)
            new = alloc.replace({s: alloc.bundles[s] | {g}}, alloc.pool - {g})
            return _eliminate(state, new, [s], [g])
    return NOT_APPLIED


def rule2(state: State) -> RuleOutcome:
    """An agent valuing the pool above v_i(X_i)/sqrt(2) takes its relevant
    part; bundles shift along the path from its source and the source's
    old bundle returns to the pool."""
    inst, alloc = state.instance, state.allocation
    if not alloc.pool:
        return NOT_APPLIED
    sums = kernels.bundle_stats(inst, alloc)[0]
    n = inst.num_agents
    for i in range(n):
        own, pooled = sums[i][i], sums[i][n]
        if not own * own < 2 * pooled * pooled:
            continue
        G, sources, comps = _view(state)
        if i in sources:
            raise InvariantViolated(f"rule 2 picked source {i} although rule 1 is inapplicable")
        s = next(src for src in sources if i in comps[src])
        adj = {a: [] for a in G.agents}
        for a, b in sorted(graph.threshold_view(G, SQRT2)):
            adj[a].append(b)
        path = graph.shortest_path(adj, s, i)
        changes = {a: alloc.bundles[b] for a, b in zip(path, path[1:])}
        take = relevant_set(inst, alloc.pool, i)
        changes[i] = take
        new = alloc.replace(changes, (alloc.pool - take) | alloc.bundles[s])
        return _eliminate(state, new, sorted(changes), sorted(take), path=tuple(path))
    return NOT_APPLIED


RULES = (("rule1", rule1), ("rule2", rule2))


def final(state: State):
    """The whole pool goes to the source with the smallest bundle value."""
    inst, alloc = state.instance, state.allocation
    if not alloc.pool:
        return alloc
    _, sources, _ = _view(state)
    s = min(sources, key=lambda a: (inherent_value(inst, alloc.bundles[a]), a))
    return alloc.replace({s: alloc.bundles[s] | alloc.pool}, frozenset())


def audit(name: str, before: State, out: RuleOutcome) -> None:
    inst, alloc = out.state.instance, out.state.allocation
    rep = check_named_property(inst, alloc, "section")
    if not rep.passed:
        raise InvariantViolated(f"{name} gave an agent an irrelevant good: {rep.violations[:3]}")
    rep = check_alpha_efx(inst, alloc, SQRT2)
    if not rep.passed:
        raise InvariantViolated(f"{name} left sqrt(2)-strong envy: {rep.violations[:3]}")
