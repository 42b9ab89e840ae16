"""Weighted envy graphs, threshold views, ranks and super-unit cycles."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping

from . import kernels
from .core import Allocation, Instance, exceeds
from .errors import CyclicGraph, SuperUnitCycle, UndefinedWeight


@dataclass(frozen=True, eq=False)
class EnvyGraph:
    """w(i, j) = v_i(X_j) / v_i(X_i) over an agent subset.

    `own[i]` is v_i(X_i). Pairs where both values are zero carry no weight.
    """

    agents: tuple[int, ...]
    own: Mapping[int, Fraction]
    weight: Mapping[tuple[int, int], Fraction]

    @property
    def n(self) -> int:
        return len(self.agents)

    def out_edges(self, i: int):
        return [(j, w) for (a, j), w in self.weight.items() if a == i]


def build(instance: Instance, alloc: Allocation, agents: Iterable[int] | None = None) -> EnvyGraph:
    sums = kernels.bundle_stats(instance, alloc)[0]
    agents = tuple(sorted(range(instance.num_agents) if agents is None else agents))
    scale = instance.scale
    own, weight = {}, {}
    for i in agents:
        mine = sums[i][i]
        own[i] = Fraction(mine, scale)
        for j in agents:
            if j == i:
                continue
            theirs = sums[i][j]
            if mine == 0:
                if theirs > 0:
                    raise UndefinedWeight(i, j)
                continue
            weight[(i, j)] = Fraction(theirs, mine)
    return EnvyGraph(agents, own, weight)


def threshold_view(G: EnvyGraph, beta) -> frozenset[tuple[int, int]]:
    """Edges with weight strictly above beta (beta may be SQRT2)."""
    return frozenset(e for e, w in G.weight.items() if exceeds(w, beta))


def _adjacency(agents, edges) -> dict[int, list[int]]:
    adj = {a: [] for a in agents}
    for i, j in sorted(edges):
        adj[i].append(j)
    return adj


def find_cycle(agents, edges) -> tuple[int, ...] | None:
    """First directed cycle found by DFS in ascending vertex order."""
    adj = _adjacency(agents, edges)
    color = {a: 0 for a in agents}
    for start in sorted(agents):
        if color[start]:
            continue
        stack = [(start, iter(adj[start]))]
        path = [start]
        color[start] = 1
        while stack:
            v, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                color[v] = 2
                stack.pop()
                path.pop()
            elif color[nxt] == 1:
                return tuple(path[path.index(nxt):])
            elif color[nxt] == 0:
                color[nxt] = 1
                path.append(nxt)
                stack.append((nxt, iter(adj[nxt])))
    return None


def sources_and_components(G: EnvyGraph, beta):
    """Sources of the beta-view in ascending order and their components.

    C(s) holds the agents reachable from s but from no earlier source.
    """
    edges = threshold_view(G, beta)
    cyc = find_cycle(G.agents, edges)
    if cyc is not None:
        raise CyclicGraph(cyc)
    adj = _adjacency(G.agents, edges)
    has_in = {j for _, j in edges}
    sources = [a for a in G.agents if a not in has_in]
    claimed: set[int] = set()
    comps: dict[int, frozenset[int]] = {}
    for s in sources:
        seen = {s}
        stack = [s]
        while stack:
            v = stack.pop()
            for u in adj[v]:
                if u not in seen:
                    seen.add(u)
                    stack.append(u)
        comps[s] = frozenset(seen - claimed)
        claimed |= seen
    return sources, comps


def shortest_path(adj: Mapping[int, list[int]], src: int, dst: int) -> list[int] | None:
    """Shortest path by BFS; ties go to the lexicographically smallest path."""
    best = {src: [src]}
    frontier = [src]
    while frontier and dst not in best:
        nxt = []
        for v in sorted(frontier, key=best.__getitem__):
            for u in adj.get(v, ()):
                if u not in best:
                    best[u] = best[v] + [u]
                    nxt.append(u)
        frontier = nxt
    return best.get(dst)


def super_unit_cycle(G: EnvyGraph) -> tuple[int, ...] | None:
    """A cycle with weight product above 1, or None.

    Multiplicative Bellman-Ford from an implicit source joined to every
    vertex with weight 1; an improvement in round |agents| proves a cycle.
    """
    agents = G.agents
    edges = sorted((e, w) for e, w in G.weight.items() if w > 0)
    best = {a: Fraction(1) for a in agents}
    parent: dict[int, int] = {}
    last = None
    for _ in range(len(agents)):
        last = None
        for (i, j), w in edges:
            cand = best[i] * w
            if cand > best[j]:
                best[j] = cand
                parent[j] = i
                last = j
        if last is None:
            return None
    v = last
    for _ in range(len(agents)):
        v = parent[v]
    cycle = [v]
    u = parent[v]
    while u != v:
        cycle.append(u)
        u = parent[u]
    cycle.reverse()
    k = cycle.index(min(cycle))
    return tuple(cycle[k:] + cycle[:k])


def cycle_product(G: EnvyGraph, cycle) -> Fraction:
    prod = Fraction(1)
    for a, b in zip(cycle, cycle[1:] + cycle[:1]):
        prod *= G.weight.get((a, b), Fraction(0))
    return prod


@dataclass(frozen=True)
class RankEntry:
    rank: Fraction
    root: int
    path: tuple[int, ...]
    virtual_value: Fraction


class RankTable(dict):
    """Mapping agent -> RankEntry."""

    def rank(self, i: int) -> Fraction:
        return self[i].rank

    def virtual(self, i: int) -> Fraction:
        return self[i].virtual_value


def compute_ranks(G: EnvyGraph) -> RankTable:
    """Maximum path products ending at each agent.

    Ties: larger product, then smaller root, then lexicographically smaller
    path. Paths are kept simple; with no super-unit cycle the maxima over
    walks and simple paths coincide.
    """
    cyc = super_unit_cycle(G)
    if cyc is not None:
        raise SuperUnitCycle(cyc)
    edges = sorted((e, w) for e, w in G.weight.items() if w > 0)
    state = {a: (Fraction(1), a, (a,)) for a in G.agents}
    changed = True
    while changed:
        changed = False
        for (i, j), w in edges:
            prod, root, path = state[i]
            if j in path:
                continue
            cand = (prod * w, root, path + (j,))
            cur = state[j]
            if cand[0] > cur[0] or (cand[0] == cur[0] and (cand[1], cand[2]) < (cur[1], cur[2])):
                state[j] = cand
                changed = True
    table = RankTable()
    for a in G.agents:
        prod, root, path = state[a]
        table[a] = RankEntry(prod, root, path, G.own[a] / prod)
    return table


def feasible_rank_bound_check(G: EnvyGraph, rhat: Mapping[int, Fraction]) -> bool:
    return all(rhat[i] * w <= rhat[j] for (i, j), w in G.weight.items())
