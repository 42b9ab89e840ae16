"""Fairness verifiers, named allocation properties and potentials.

Strong envy follows the EFX reading: agent i beta-strongly envies X_j when
some single good can be removed from X_j and i still values the rest above
beta * v_i(X_i). For additive values the least valuable good is the best
candidate, so one removal per pair decides it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import total_ordering
from typing import Iterable, Mapping

from . import graph, kernels
from .core import SQRT2, Allocation, Instance, beta_lt, relevant_set
from .errors import SuperUnitCycle, UndefinedWeight, UnknownProperty


@dataclass(frozen=True)
class Violation:
    i: int
    j: int
    witness: tuple[int, ...]
    margin: Fraction
    note: str = ""


@dataclass
class FairnessReport:
    violations: list[Violation] = field(default_factory=list)
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return not self.violations

    @property
    def verdict(self) -> str:
        return "pass" if self.passed else "fail"

    def __bool__(self) -> bool:
        return self.passed


def _cheapest(instance: Instance, i: int, goods: Iterable[int], k: int = 1) -> tuple[int, ...]:
    row = instance.table[i]
    return tuple(sorted(sorted(goods), key=lambda g: row[g])[:k])


def _margin(beta, own: Fraction, rest: Fraction) -> Fraction:
    # For sqrt(2) the margin is reported in squared units: rest^2 - 2 own^2.
    if beta is SQRT2:
        return rest * rest - 2 * own * own
    return rest - Fraction(beta) * own


def beta_strong_envy(instance: Instance, alloc: Allocation, i: int, j: int, beta=1) -> Fraction | None:
    """Positive margin when i beta-strongly envies X_j, else None."""
    if i == j:
        raise ValueError("strong envy needs two distinct agents")
    bundle = alloc.bundles[j]
    if len(bundle) < 2:
        return None
    scale = instance.scale
    row = instance.table[i]
    own = Fraction(sum(row[g] for g in alloc.bundles[i]), scale)
    (g,) = _cheapest(instance, i, bundle)
    rest = Fraction(sum(row[h] for h in bundle) - row[g], scale)
    if beta_lt(beta, own, rest):
        return _margin(beta, own, rest)
    return None


def check_alpha_efx(instance: Instance, alloc: Allocation, beta=1, agents: Iterable[int] | None = None) -> FairnessReport:
    """No ordered pair (within `agents`, default all) has beta-strong envy."""
    sums, mins, _, counts = kernels.bundle_stats(instance, alloc)
    n = instance.num_agents
    agents = range(n) if agents is None else sorted(agents)
    scale = instance.scale
    report = FairnessReport()
    for i in agents:
        a = sums[i][i]
        for j in agents:
            if j == i or counts[j] < 2:
                continue
            b = sums[i][j] - mins[i][j]
            if beta_lt(beta, a, b):
                wit = _cheapest(instance, i, alloc.bundles[j])
                report.violations.append(
                    Violation(i, j, wit, _margin(beta, Fraction(a, scale), Fraction(b, scale)))
                )
    return report


def check_efx(instance: Instance, alloc: Allocation) -> FairnessReport:
    return check_alpha_efx(instance, alloc, 1)


def check_ef2x(instance: Instance, alloc: Allocation) -> FairnessReport:
    """v_i(X_i) >= v_i(X_j minus any two goods) for every ordered pair."""
    sums, _, min2, counts = kernels.bundle_stats(instance, alloc)
    n = instance.num_agents
    scale = instance.scale
    report = FairnessReport()
    for i in range(n):
        a = sums[i][i]
        for j in range(n):
            if j == i or counts[j] < 3:
                continue
            b = sums[i][j] - min2[i][j]
            if b > a:
                wit = _cheapest(instance, i, alloc.bundles[j], 2)
                report.violations.append(Violation(i, j, wit, Fraction(b - a, scale)))
    return report


def check_virtual_efx(
    instance: Instance,
    alloc: Allocation,
    ranks: graph.RankTable,
    include_self: bool = False,
) -> FairnessReport:
    """No agent in the rank table values another's bundle minus its cheapest
    good above its own virtual value. With `include_self` the agent's own
    bundle is tested as well."""
    sums, mins, _, counts = kernels.bundle_stats(instance, alloc)
    scale = instance.scale
    agents = sorted(ranks)
    report = FairnessReport()
    for i in agents:
        vv = ranks[i].virtual_value
        for j in agents:
            if (j == i and not include_self) or counts[j] == 0:
                continue
            rest = Fraction(sums[i][j] - mins[i][j], scale)
            if rest > vv:
                wit = _cheapest(instance, i, alloc.bundles[j])
                report.violations.append(Violation(i, j, wit, rest - vv, "virtual"))
    return report


def _irrelevant_holdings(instance: Instance, alloc: Allocation, agents) -> FairnessReport:
    report = FairnessReport()
    for i in agents:
        bad = alloc.bundles[i] - instance.relevant_goods[i]
        if bad:
            report.violations.append(Violation(i, i, tuple(sorted(bad)), Fraction(0), "irrelevant good"))
    return report


def bundle_type(instance: Instance, i: int, bundle: Iterable[int]) -> int | None:
    """Corresponding agent of a typed bundle, or None when untyped.

    A bundle is typed when all of its goods are relevant to the same set of
    agents T, with i in T and |T| <= 2. The corresponding agent is the other
    member of T, or i itself when T = {i}.
    """
    types = {instance.interested_agents[g] for g in bundle}
    if not types:
        return i
    if len(types) != 1:
        return None
    (t,) = types
    if i not in t or len(t) > 2:
        return None
    others = t - {i}
    return min(others) if others else i


def _ddagger(instance, alloc, context) -> FairnessReport:
    sums = kernels.bundle_stats(instance, alloc)[0]
    n = instance.num_agents
    envied = [j for j in range(n) if any(sums[i][j] > sums[i][i] for i in range(n) if i != j)]
    return _irrelevant_holdings(instance, alloc, envied)


def _section(instance, alloc, context) -> FairnessReport:
    return _irrelevant_holdings(instance, alloc, range(instance.num_agents))


def _dagger(instance, alloc, context) -> FairnessReport:
    report = _section(instance, alloc, context)
    try:
        G = graph.build(instance, alloc)
        ranks = graph.compute_ranks(G)
    except UndefinedWeight as exc:
        report.violations.append(Violation(exc.i, exc.j, (), Fraction(0), "undefined weight"))
        return report
    except SuperUnitCycle as exc:
        cyc = exc.cycle
        report.violations.append(
            Violation(cyc[0], cyc[1 % len(cyc)], cyc, graph.cycle_product(G, cyc) - 1, "super-unit cycle")
        )
        return report
    report.violations.extend(check_virtual_efx(instance, alloc, ranks).violations)
    report.details["ranks"] = ranks
    return report


def _uparrow(instance, alloc, context) -> FairnessReport:
    remaining = sorted(context.get("remaining", range(instance.num_agents)))
    report = FairnessReport()
    partners = {}
    for i in remaining:
        j = bundle_type(instance, i, alloc.bundles[i])
        partners[i] = j
        if j is None:
            report.violations.append(
                Violation(i, i, tuple(sorted(alloc.bundles[i])), Fraction(0), "bundle has no corresponding agent")
            )
    report.details["corresponding"] = partners
    try:
        G = graph.build(instance, alloc, remaining)
        ranks = graph.compute_ranks(G)
    except (UndefinedWeight, SuperUnitCycle) as exc:
        report.violations.append(Violation(-1, -1, (), Fraction(0), str(exc)))
        return report
    report.violations.extend(check_virtual_efx(instance, alloc, ranks, include_self=True).violations)
    report.details["ranks"] = ranks
    return report


PROPERTIES = {
    "ddagger": _ddagger,
    "section": _section,
    "dagger": _dagger,
    "uparrow": _uparrow,
}


def check_named_property(instance: Instance, alloc: Allocation, name: str, context: Mapping | None = None) -> FairnessReport:
    """Named invariants used by the algorithms.

    ddagger: every agent envied in the threshold-1 view holds only goods
    relevant to itself. section: every bundle is fully relevant to its owner.
    dagger: no super-unit cycle, no virtual strong envy, bundles fully
    relevant. uparrow: over the remaining agents (context["remaining"]),
    bundles are typed and nobody values any bundle, its own included, minus
    its cheapest good above its virtual value.
    """
    try:
        fn = PROPERTIES[name]
    except KeyError:
        raise UnknownProperty(name) from None
    return fn(instance, alloc, context or {})


# ---------------------------------------------------------------- potentials

INF = "inf"


@total_ordering
@dataclass(frozen=True)
class Potential:
    tag: str
    payload: tuple

    def key(self) -> tuple:
        p = self.payload
        if self.tag == "sources":
            return tuple((1, 0) if x == INF else (0, x) for x in p)
        if self.tag == "nsw":
            zeros, prod = p
            return (-zeros, prod)
        if self.tag == "pqrax":
            done, zeros, prod = p
            return (done, -zeros, prod)
        return p

    def _check(self, other):
        if not isinstance(other, Potential) or other.tag != self.tag:
            raise TypeError("potentials with different tags are incomparable")

    def __lt__(self, other):
        self._check(other)
        return self.key() < other.key()

    def __eq__(self, other):
        if not isinstance(other, Potential):
            return NotImplemented
        return self.tag == other.tag and self.key() == other.key()

    def __hash__(self):
        return hash((self.tag, self.key()))

    def strings(self) -> list[str]:
        return [str(x) for x in self.payload]


def compare(a: Potential, b: Potential) -> int:
    return -1 if a < b else (1 if b < a else 0)


def _product(factors) -> tuple[int, Fraction]:
    zeros, prod = 0, Fraction(1)
    for f in factors:
        if f == 0:
            zeros += 1
        else:
            prod *= f
    return zeros, prod


def potential(instance: Instance, alloc: Allocation, tag: str, context: Mapping | None = None) -> Potential:
    context = context or {}
    n = instance.num_agents
    scale = instance.scale
    sums = kernels.bundle_stats(instance, alloc)[0]
    own = [Fraction(sums[i][i], scale) for i in range(n)]
    if tag == "cxxra":
        return Potential(tag, (sum(own, Fraction(0)), sum(len(b) for b in alloc.bundles)))
    if tag == "sources":
        G = graph.build(instance, alloc)
        sources, _ = graph.sources_and_components(G, SQRT2)
        if instance.restricted is not None:
            inh = instance.restricted.inherent
            vals = [sum((inh[g] for g in alloc.bundles[s]), Fraction(0)) for s in sources]
        else:
            vals = [own[s] for s in sources]
        return Potential(tag, tuple(sorted(vals)) + (INF,))
    if tag == "nsw":
        agents = context.get("agents", range(n))
        return Potential(tag, _product(own[i] for i in agents))
    if tag == "pqrax":
        remaining = context.get("remaining", range(n))
        remaining = list(remaining)
        zeros, prod = _product(own[i] for i in remaining)
        return Potential(tag, (n - len(remaining), zeros, prod))
    raise UnknownProperty(tag)


__all__ = [
    "FairnessReport",
    "Violation",
    "Potential",
    "beta_strong_envy",
    "check_alpha_efx",
    "check_efx",
    "check_ef2x",
    "check_virtual_efx",
    "check_named_property",
    "bundle_type",
    "potential",
    "compare",
    "relevant_set",
]
