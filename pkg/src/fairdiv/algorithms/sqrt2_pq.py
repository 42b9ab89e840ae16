"""sqrt(2)/2-EFX for (inf, 1)-bounded additive valuations.

Invariants: the envy graph has no cycle with weight product above 1, no
agent values another bundle minus its cheapest good above its own virtual
value, and every bundle is fully relevant to its owner. The single rule
hands a minimal virtually envied pool subset to the agent with the largest
value-to-virtual-value ratio and shifts bundles along that agent's
rankpath. Nash welfare strictly increases.
"""

from __future__ import annotations

from fractions import Fraction

from .. import graph
from ..core import relevant_set, value
from ..errors import InvariantViolated
from ..fairness import check_named_property, check_virtual_efx
from ..framework import NOT_APPLIED, RuleOutcome, State, most_envious_agent

TAG = "nsw"


def shift_along(alloc, path, receiver_bundle):
    """Agents on `path` take their successor's bundle, the last agent takes
    `receiver_bundle`, and the first agent's old bundle joins the pool."""
    changes = {a: alloc.bundles[b] for a, b in zip(path, path[1:])}
    changes[path[-1]] = frozenset(receiver_bundle)
    pool = (alloc.pool - receiver_bundle) | alloc.bundles[path[0]]
    return alloc.replace(changes, pool)


def shift_path(ranks, i):
    """Suffix of i's rankpath starting at its last rank-1 vertex.

    The suffix has the same weight product, and every later vertex has rank
    above 1, so each agent on it values all goods of its successor's bundle.
    """
    path = ranks[i].path
    start = max(k for k, a in enumerate(path) if ranks[a].rank == 1)
    return path[start:]


def rank_witness(ranks, path, receiver_rank) -> dict:
    """Candidate solution of the rank LP after a shift along `path`."""
    rhat = {a: e.rank for a, e in ranks.items()}
    for a, b in zip(path, path[1:]):
        rhat[a] = ranks[b].rank
    rhat[path[-1]] = receiver_rank
    return rhat


def check_shift(inst, before, after, agents, rhat, name):
    """Assert the LP witness, monotone virtual values and virtual EFX."""
    G2 = graph.build(inst, after, agents)
    if not graph.feasible_rank_bound_check(G2, rhat):
        raise InvariantViolated(f"{name}: rank witness infeasible")
    ranks2 = graph.compute_ranks(G2)
    for a in before:
        if ranks2[a].virtual_value < before[a].virtual_value:
            raise InvariantViolated(f"{name}: virtual value of {a} decreased")
    return ranks2


def rule1(state: State) -> RuleOutcome:
    inst, alloc = state.instance, state.allocation
    if not alloc.pool:
        return NOT_APPLIED
    ranks = graph.compute_ranks(graph.build(inst, alloc))
    virtual = {a: e.virtual_value for a, e in ranks.items()}
    found = most_envious_agent(inst, alloc, alloc.pool, thresholds=virtual)
    if found is None:
        return NOT_APPLIED
    _, subset = found
    ratio = {a: value(inst, a, subset) / virtual[a] for a in sorted(virtual)}
    best = max(ratio.values())
    i = min(a for a, r in ratio.items() if r == best)
    path = shift_path(ranks, i)
    new = shift_along(alloc, path, subset)
    rhat = rank_witness(ranks, path, best)
    ranks2 = check_shift(inst, ranks, new, None, rhat, "rule1")
    notes = {
        "receiver": i,
        "path": path,
        "subset": tuple(sorted(subset)),
        "rhat": rhat,
        "virtual_before": virtual,
        "virtual_after": {a: e.virtual_value for a, e in ranks2.items()},
    }
    return RuleOutcome(True, state.with_allocation(new), tuple(path), tuple(sorted(subset)), notes)


RULES = (("rule1", rule1),)


def final(state: State):
    """A rank-1 agent collects what agents of rank at most sqrt(2) leave."""
    inst, alloc = state.instance, state.allocation
    if not alloc.pool:
        return alloc
    ranks = graph.compute_ranks(graph.build(inst, alloc))
    i = min(a for a, e in ranks.items() if e.rank == 1)
    pool = set(alloc.pool)
    changes = {}
    for k in sorted(ranks):
        r = ranks[k].rank
        if k == i or r * r > 2:
            continue
        take = relevant_set(inst, pool, k)
        if take:
            changes[k] = alloc.bundles[k] | take
            pool -= take
    changes[i] = alloc.bundles[i] | pool
    return alloc.replace(changes, frozenset())


def audit(name: str, before: State, out: RuleOutcome) -> None:
    inst, alloc = out.state.instance, out.state.allocation
    rep = check_named_property(inst, alloc, "dagger")
    if not rep.passed:
        raise InvariantViolated(f"{name} broke the rank invariants: {rep.violations[:3]}")
    ranks = rep.details["ranks"]
    if not check_virtual_efx(inst, alloc, ranks).passed:
        raise InvariantViolated(f"{name} left virtual strong envy")
    if out.annotations:
        rhat = out.annotations["rhat"]
        if any(r < 1 for r in rhat.values()) or not all(isinstance(r, Fraction) for r in rhat.values()):
            raise InvariantViolated(f"{name}: malformed rank witness")
