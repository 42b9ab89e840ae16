"""Brute-force ground truth for small instances.

Everything here is computed from `value` by plain enumeration, with no use
of the envy graph or the fairness checkers, so the two can be compared.
"""

from __future__ import annotations

from fractions import Fraction
from itertools import combinations, permutations, product
from typing import Callable, Iterable, Iterator, Mapping

from . import kernels
from .core import Allocation, Instance, beta_lt, value
from .errors import BudgetExceeded, SuperUnitCycle, UndefinedWeight

DEFAULT_BUDGET = 2_000_000


def _owners_to_alloc(owners: tuple[int, ...], n: int) -> Allocation:
    bundles = [set() for _ in range(n + 1)]
    for g, o in enumerate(owners):
        bundles[o].add(g)
    return Allocation(frozenset(bundles[n]), tuple(frozenset(b) for b in bundles[:n]))


def _check_budget(count: int, budget: int) -> None:
    if count > budget:
        raise BudgetExceeded(f"{count} assignments exceed the budget of {budget}")


def enumerate_complete(instance: Instance, budget: int = DEFAULT_BUDGET) -> Iterator[Allocation]:
    """Every complete allocation once. Goods are assigned in index order and
    the last good's owner varies fastest."""
    n, m = instance.num_agents, instance.num_goods
    _check_budget(n**m, budget)
    for owners in product(range(n), repeat=m):
        yield _owners_to_alloc(owners, n)


def enumerate_partial(instance: Instance, budget: int = DEFAULT_BUDGET) -> Iterator[Allocation]:
    """Every allocation with a pool; owner n stands for the pool."""
    n, m = instance.num_agents, instance.num_goods
    _check_budget((n + 1) ** m, budget)
    for owners in product(range(n + 1), repeat=m):
        yield _owners_to_alloc(owners, n)


def strict_subsets(goods: Iterable[int]) -> Iterator[frozenset[int]]:
    goods = sorted(goods)
    for k in range(len(goods)):
        for c in combinations(goods, k):
            yield frozenset(c)


def is_efx_by_subsets(instance: Instance, alloc: Allocation, beta=1) -> bool:
    """No agent values a strict subset of another bundle above beta times
    its own bundle."""
    n = instance.num_agents
    for i in range(n):
        own = value(instance, i, alloc.bundles[i])
        for j in range(n):
            if j == i:
                continue
            for S in strict_subsets(alloc.bundles[j]):
                if beta_lt(beta, own, value(instance, i, S)):
                    return False
    return True


def is_ef2x_by_subsets(instance: Instance, alloc: Allocation) -> bool:
    """No agent envies a bundle with any two of its goods removed."""
    n = instance.num_agents
    for i in range(n):
        own = value(instance, i, alloc.bundles[i])
        for j in range(n):
            bundle = alloc.bundles[j]
            if j == i or len(bundle) < 3:
                continue
            for pair in combinations(sorted(bundle), 2):
                if value(instance, i, bundle - set(pair)) > own:
                    return False
    return True


def exists_efx(instance: Instance, budget: int = DEFAULT_BUDGET, beta=1) -> Allocation | None:
    """First complete beta-EFX allocation in enumeration order, if any."""
    n, m = instance.num_agents, instance.num_goods
    _check_budget(n**m, budget)
    count, owners = kernels.scan_efx(instance, beta, first_only=True)
    if not count:
        return None
    return _owners_to_alloc(tuple(owners), n)


def count_efx(instance: Instance, budget: int = DEFAULT_BUDGET, beta=1, backend=None) -> int:
    n, m = instance.num_agents, instance.num_goods
    _check_budget(n**m, budget)
    return kernels.scan_efx(instance, beta, first_only=False, backend=backend)[0]


def _weights(instance: Instance, alloc: Allocation, agents) -> dict[tuple[int, int], Fraction]:
    w = {}
    for i in agents:
        own = value(instance, i, alloc.bundles[i])
        for j in agents:
            if i == j:
                continue
            other = value(instance, i, alloc.bundles[j])
            if own == 0:
                if other > 0:
                    raise UndefinedWeight(i, j)
                continue
            w[(i, j)] = other / own
    return w


def _path_product(w, path) -> Fraction:
    prod = Fraction(1)
    for a, b in zip(path, path[1:]):
        prod *= w.get((a, b), Fraction(0))
    return prod


def brute_super_unit_cycle(instance: Instance, alloc: Allocation, agents=None) -> tuple[int, ...] | None:
    """Some simple cycle with weight product above 1, by enumeration."""
    agents = sorted(range(instance.num_agents) if agents is None else agents)
    w = _weights(instance, alloc, agents)
    for k in range(2, len(agents) + 1):
        for cyc in permutations(agents, k):
            if cyc[0] != min(cyc):
                continue
            if _path_product(w, cyc + (cyc[0],)) > 1:
                return cyc
    return None


def brute_rank(instance: Instance, alloc: Allocation, i: int, agents=None) -> tuple[Fraction, tuple[int, ...]]:
    """Maximum weight product over simple paths ending at i.

    Ties go to the smaller root, then the lexicographically smaller path.
    """
    agents = sorted(range(instance.num_agents) if agents is None else agents)
    if brute_super_unit_cycle(instance, alloc, agents) is not None:
        raise SuperUnitCycle(brute_super_unit_cycle(instance, alloc, agents))
    w = _weights(instance, alloc, agents)
    others = [a for a in agents if a != i]
    best = (Fraction(1), (i,))
    for k in range(1, len(others) + 1):
        for prefix in permutations(others, k):
            path = prefix + (i,)
            prod = _path_product(w, path)
            if prod > best[0] or (prod == best[0] and (path[0], path) < (best[1][0], best[1])):
                best = (prod, path)
    return best


def max_nsw_complete(instance: Instance, budget: int = DEFAULT_BUDGET) -> Allocation:
    """Complete allocation with the fewest zero-valued agents, then the
    largest product of the nonzero values. First in enumeration order."""
    best, best_key = None, None
    for alloc in enumerate_complete(instance, budget):
        key = nsw_key(instance, alloc)
        if best_key is None or key > best_key:
            best, best_key = alloc, key
    return best


def nsw_key(instance: Instance, alloc: Allocation) -> tuple[int, Fraction]:
    zeros, prod = 0, Fraction(1)
    for i in range(instance.num_agents):
        v = value(instance, i, alloc.bundles[i])
        if v == 0:
            zeros += 1
        else:
            prod *= v
    return -zeros, prod


def brute_matching_size(rel, agents, goods) -> int:
    """Largest number of agents matched to distinct relevant goods, by
    exhaustive search."""
    agents = sorted(agents)

    def best(k, used):
        if k == len(agents):
            return 0
        out = best(k + 1, used)
        for g in sorted(rel[agents[k]] & goods - used):
            out = max(out, 1 + best(k + 1, used | {g}))
        return out

    return best(0, frozenset())


def hall_deficient_agents(instance: Instance) -> frozenset[int]:
    """Agents left unmatched by at least one maximum matching of agents to
    relevant goods. Empty exactly when a perfect matching exists."""
    rel = instance.relevant_goods
    goods = frozenset(range(instance.num_goods))
    agents = range(instance.num_agents)
    full = brute_matching_size(rel, agents, goods)
    return frozenset(a for a in agents if brute_matching_size(rel, [b for b in agents if b != a], goods) == full)


def is_inclusion_minimal(T: Iterable[int], envied: Callable[[frozenset[int]], bool]) -> bool:
    """T is envied and no strict subset of T is."""
    T = frozenset(T)
    return envied(T) and not any(envied(S) for S in strict_subsets(T))


def envied_by_someone(instance: Instance, limits: Mapping[int, Fraction]) -> Callable[[frozenset[int]], bool]:
    """Predicate: some agent i values the set above limits[i]."""
    return lambda S: any(value(instance, i, S) > t for i, t in limits.items())


__all__ = [
    "DEFAULT_BUDGET",
    "brute_matching_size",
    "brute_rank",
    "brute_super_unit_cycle",
    "count_efx",
    "enumerate_complete",
    "enumerate_partial",
    "envied_by_someone",
    "exists_efx",
    "hall_deficient_agents",
    "is_ef2x_by_subsets",
    "is_efx_by_subsets",
    "is_inclusion_minimal",
    "max_nsw_complete",
    "nsw_key",
    "strict_subsets",
]
