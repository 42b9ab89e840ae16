"""Exact EFX for restricted additive valuations where each good is relevant
to at most two agents.

Agents leave the remaining set N once satisfied; ranks and virtual values
are computed on the envy graph induced on N. Every remaining bundle is
typed: all of its goods are relevant to the same one or two agents. The
potential is (agents satisfied, Nash welfare over N).
"""

from __future__ import annotations

from fractions import Fraction

from .. import graph, kernels
from ..core import relevant_set, scaled_value
from ..errors import InvariantViolated
from ..fairness import check_alpha_efx, check_named_property
from ..framework import NOT_APPLIED, RuleOutcome, State, minimal_subset_exceeding
from .sqrt2_pq import check_shift, rank_witness, shift_along, shift_path

TAG = "pqrax"


def _ranks(state: State):
    return graph.compute_ranks(graph.build(state.instance, state.allocation, state.remaining))


def _goods_type(inst, goods):
    types = {inst.interested_agents[g] for g in goods}
    return types.pop() if len(types) == 1 else None


def rule1(state: State) -> RuleOutcome:
    """A rank-1 agent adds a pool good of its bundle's type and keeps a
    minimal subset worth more than before."""
    inst, alloc, N = state.instance, state.allocation, state.remaining
    if len(N) < 2 or not alloc.pool:
        return NOT_APPLIED
    ranks = _ranks(state)
    pool = sorted(alloc.pool)
    for i in sorted(N):
        if ranks[i].rank != 1:
            continue
        kind = _goods_type(inst, alloc.bundles[i])
        for g in pool:
            if inst.interested_agents[g] != kind:
                continue
            grown = alloc.bundles[i] | {g}
            old = Fraction(scaled_value(inst, i, alloc.bundles[i]), inst.scale)
            keep = minimal_subset_exceeding(inst, i, grown, old)
            new = alloc.replace({i: keep}, (alloc.pool - {g}) | (grown - keep))
            ranks2 = graph.compute_ranks(graph.build(inst, new, N))
            if any(ranks2[a].virtual_value < ranks[a].virtual_value for a in N):
                raise InvariantViolated("rule1: a virtual value decreased")
            return RuleOutcome(True, state.with_allocation(new), (i,), (g,), {"kept": tuple(sorted(keep))})
    return NOT_APPLIED


def rule2(state: State) -> RuleOutcome:
    """An agent whose virtual value is below a typed pool slice takes a
    minimal part of it worth more than that virtual value; bundles shift
    along its rankpath."""
    inst, alloc, N = state.instance, state.allocation, state.remaining
    if len(N) < 2 or not alloc.pool:
        return NOT_APPLIED
    ranks = _ranks(state)
    virtual = {a: e.virtual_value for a, e in ranks.items()}
    slices: dict[frozenset, list[int]] = {}
    for g in sorted(alloc.pool):
        slices.setdefault(inst.interested_agents[g], []).append(g)
    scale = inst.scale
    for i in sorted(N):
        options = []
        for kind, goods in slices.items():
            if i not in kind or len(kind) > 2:
                continue
            (j,) = (kind - {i}) or {i}
            worth = Fraction(scaled_value(inst, i, goods), scale)
            if worth <= virtual[i]:
                continue
            if j in N and j != i and virtual[j] < virtual[i]:
                continue
            options.append((virtual[j] if j in N else None, j, goods))
        if not options:
            continue
        options.sort(key=lambda o: (o[0] is None, o[0] if o[0] is not None else 0, o[1]))
        _, j, goods = options[0]
        subset = minimal_subset_exceeding(inst, i, goods, virtual[i])
        path = shift_path(ranks, i)
        new = shift_along(alloc, path, subset)
        ratio = Fraction(scaled_value(inst, i, subset), scale) / virtual[i]
        rhat = rank_witness(ranks, path, ratio)
        check_shift(inst, ranks, new, N, rhat, "rule2")
        notes = {"receiver": i, "partner": j, "path": path, "subset": tuple(sorted(subset)), "rhat": rhat}
        return RuleOutcome(True, state.with_allocation(new), tuple(path), tuple(sorted(subset)), notes)
    return NOT_APPLIED


def rule3(state: State) -> RuleOutcome:
    """An agent valuing no other remaining bundle takes the better of its
    bundle and its relevant pool goods, and leaves."""
    inst, alloc, N = state.instance, state.allocation, state.remaining
    if len(N) < 2:
        return NOT_APPLIED
    sums = kernels.bundle_stats(inst, alloc)[0]
    for i in sorted(N):
        if any(sums[i][j] > 0 for j in N if j != i):
            continue
        rel = relevant_set(inst, alloc.pool, i)
        if scaled_value(inst, i, rel) > sums[i][i]:
            new = alloc.replace({i: rel}, (alloc.pool - rel) | alloc.bundles[i])
            goods = tuple(sorted(rel))
        else:
            new, goods = alloc, ()
        return RuleOutcome(True, state.with_allocation(new, N - {i}), (i,), goods, {"satisfied": i})
    return NOT_APPLIED


def rule4(state: State) -> RuleOutcome:
    """On the disjoint cycles of the positive-value view, a rank-1 agent
    takes the better of its bundle plus relevant pool goods and its
    successor's bundle, then leaves. In the second case the cycle rotates."""
    inst, alloc, N = state.instance, state.allocation, state.remaining
    if len(N) < 2:
        return NOT_APPLIED
    sums = kernels.bundle_stats(inst, alloc)[0]
    succ, indeg = {}, {a: 0 for a in N}
    for a in sorted(N):
        outs = [b for b in sorted(N) if b != a and sums[a][b] > 0]
        if len(outs) != 1:
            raise InvariantViolated(f"agent {a} has {len(outs)} out-edges among remaining agents")
        succ[a] = outs[0]
        indeg[outs[0]] += 1
    if any(d != 1 for d in indeg.values()):
        raise InvariantViolated("positive-value view on remaining agents is not disjoint cycles")
    ranks = _ranks(state)
    i = min(a for a in N if ranks[a].rank == 1)
    cycle = [i]
    while succ[cycle[-1]] != i:
        cycle.append(succ[cycle[-1]])
    rel = relevant_set(inst, alloc.pool, i)
    keep = alloc.bundles[i] | rel
    j1 = cycle[1]
    if scaled_value(inst, i, keep) >= sums[i][j1]:
        new = alloc.replace({i: keep}, alloc.pool - rel)
        goods = tuple(sorted(rel))
        rotated = False
    else:
        changes = {a: alloc.bundles[b] for a, b in zip(cycle, cycle[1:] + cycle[:1])}
        new = alloc.replace(changes)
        goods = ()
        rotated = True
    notes = {"satisfied": i, "cycle": tuple(cycle), "rotated": rotated}
    return RuleOutcome(True, state.with_allocation(new, N - {i}), tuple(cycle), goods, notes)


RULES = (("rule1", rule1), ("rule2", rule2), ("rule3", rule3), ("rule4", rule4))


def final(state: State):
    """The last remaining agent takes the pool."""
    alloc, N = state.allocation, state.remaining
    if not alloc.pool:
        return alloc
    if len(N) != 1:
        raise InvariantViolated(f"final step with {len(N)} remaining agents")
    (i,) = N
    return alloc.replace({i: alloc.bundles[i] | alloc.pool}, frozenset())


def audit(name: str, before: State, out: RuleOutcome) -> None:
    inst, alloc, N = out.state.instance, out.state.allocation, out.state.remaining
    rep = check_named_property(inst, alloc, "uparrow", {"remaining": N})
    if not rep.passed:
        raise InvariantViolated(f"{name} broke the typed-bundle invariants: {rep.violations[:3]}")
    if N:
        old = _ranks(before)
        new = rep.details["ranks"]
        for a in N:
            if new[a].virtual_value < old[a].virtual_value:
                raise InvariantViolated(f"{name}: virtual value of {a} decreased")
    rep = check_alpha_efx(inst, alloc, 1, agents=N)
    if not rep.passed:
        raise InvariantViolated(f"{name}: strong envy among remaining agents: {rep.violations[:3]}")
