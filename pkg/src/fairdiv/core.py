"""Instances, allocations, relevance queries and valuation-class checks.

All magnitudes are `fractions.Fraction`. Internally every instance also
carries an integer copy of its table scaled by the least common multiple
of all denominators; sums over that table are exact and ratios between
them equal the ratios of the true values.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from itertools import combinations
from math import lcm
from typing import Iterable, Sequence

from .errors import DegenerateInstance

GoodSet = frozenset


class _Sqrt2:
    """Marker for the irrational threshold sqrt(2); compared by squaring."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "SQRT2"

    def __reduce__(self):
        return (_Sqrt2, ())


SQRT2 = _Sqrt2()


def beta_lt(beta, a, b) -> bool:
    """Exact test of beta * a < b for a, b >= 0."""
    if beta is SQRT2:
        return b > 0 and 2 * a * a < b * b
    return beta * a < b


def exceeds(w, beta) -> bool:
    """Exact test of w > beta for a nonnegative weight w."""
    if beta is SQRT2:
        return w * w > 2
    return w > beta


def as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise TypeError("booleans are not values")
    if isinstance(x, (int, str)):
        return Fraction(x)
    raise TypeError(f"unsupported value type {type(x).__name__}; floats are not accepted")


@dataclass(frozen=True)
class RestrictedCertificate:
    inherent: tuple[Fraction, ...]
    relevance: tuple[frozenset[int], ...]


@dataclass(frozen=True, eq=False)
class Instance:
    num_agents: int
    num_goods: int
    values: tuple[tuple[Fraction, ...], ...]
    restricted: RestrictedCertificate | None = None
    model: str = "additive"
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        n, m = self.num_agents, self.num_goods
        if n < 0 or m < 0:
            raise ValueError("agent and good counts must be nonnegative")
        rows = tuple(tuple(as_fraction(v) for v in row) for row in self.values)
        if len(rows) != n or any(len(r) != m for r in rows):
            raise ValueError(f"value table must be {n}x{m}")
        for i, row in enumerate(rows):
            for g, v in enumerate(row):
                if v < 0:
                    raise ValueError(f"values[{i}][{g}] is negative")
        object.__setattr__(self, "values", rows)
        cert = self.restricted
        if cert is not None:
            inherent = tuple(as_fraction(v) for v in cert.inherent)
            relevance = tuple(frozenset(s) for s in cert.relevance)
            if len(inherent) != m or len(relevance) != m:
                raise ValueError("restricted certificate must cover every good")
            for g in range(m):
                if inherent[g] <= 0:
                    raise ValueError(f"inherent value of good {g} must be positive")
                for i in range(n):
                    want = inherent[g] if i in relevance[g] else 0
                    if rows[i][g] != want:
                        raise ValueError(
                            f"values[{i}][{g}] = {rows[i][g]} contradicts the restricted certificate"
                        )
            object.__setattr__(self, "restricted", RestrictedCertificate(inherent, relevance))

    @classmethod
    def from_table(cls, rows: Sequence[Sequence], *, restricted=None, model: str = "additive"):
        rows = [list(r) for r in rows]
        m = len(rows[0]) if rows else 0
        return cls(len(rows), m, tuple(tuple(r) for r in rows), restricted, model)

    def __eq__(self, other):
        if not isinstance(other, Instance):
            return NotImplemented
        return (
            self.num_agents == other.num_agents
            and self.num_goods == other.num_goods
            and self.values == other.values
            and self.restricted == other.restricted
            and self.model == other.model
        )

    def __hash__(self):
        return hash((self.num_agents, self.num_goods, self.values))

    @cached_property
    def scale(self) -> int:
        dens = [v.denominator for row in self.values for v in row]
        if self.restricted is not None:
            dens.extend(v.denominator for v in self.restricted.inherent)
        return lcm(1, *dens)

    @cached_property
    def table(self) -> tuple[tuple[int, ...], ...]:
        """Value table scaled to integers by `scale`."""
        s = self.scale
        return tuple(tuple(int(v * s) for v in row) for row in self.values)

    @cached_property
    def inherent_table(self) -> tuple[int, ...] | None:
        if self.restricted is None:
            return None
        s = self.scale
        return tuple(int(v * s) for v in self.restricted.inherent)

    @cached_property
    def relevant_goods(self) -> tuple[frozenset[int], ...]:
        return tuple(frozenset(g for g, v in enumerate(row) if v > 0) for row in self.table)

    @cached_property
    def interested_agents(self) -> tuple[frozenset[int], ...]:
        t = self.table
        return tuple(
            frozenset(i for i in range(self.num_agents) if t[i][g] > 0)
            for g in range(self.num_goods)
        )

    def with_restricted(self, cert: RestrictedCertificate) -> "Instance":
        return Instance(self.num_agents, self.num_goods, self.values, cert, self.model)

    def restrict(self, agents: Sequence[int], goods: Sequence[int]) -> "Instance":
        """Sub-instance on the given agents and goods, re-indexed in the given order."""
        rows = tuple(tuple(self.values[i][g] for g in goods) for i in agents)
        cert = None
        if self.restricted is not None:
            pos = {a: k for k, a in enumerate(agents)}
            cert = RestrictedCertificate(
                tuple(self.restricted.inherent[g] for g in goods),
                tuple(
                    frozenset(pos[a] for a in self.restricted.relevance[g] if a in pos)
                    for g in goods
                ),
            )
        return Instance(len(agents), len(goods), rows, cert, self.model)

    def without_goods(self, removed: Iterable[int]) -> "Instance":
        removed = set(removed)
        return self.restrict(range(self.num_agents), [g for g in range(self.num_goods) if g not in removed])


def scaled_value(instance: Instance, agent: int, goods: Iterable[int]) -> int:
    row = instance.table[agent]
    return sum(row[g] for g in goods)


def value(instance: Instance, agent: int, goods: Iterable[int]) -> Fraction:
    """Additive value v_agent(goods)."""
    return Fraction(scaled_value(instance, agent, goods), instance.scale)


def inherent_value(instance: Instance, goods: Iterable[int]) -> Fraction:
    """Agent-independent value v(S) of a restricted-additive instance."""
    if instance.restricted is None:
        raise DegenerateInstance("instance carries no restricted certificate")
    inh = instance.restricted.inherent
    return sum((inh[g] for g in goods), Fraction(0))


def relevant_set(instance: Instance, goods: Iterable[int], i: int) -> frozenset[int]:
    rel = instance.relevant_goods[i]
    return frozenset(g for g in goods if g in rel)


def relevant_pair(instance: Instance, goods: Iterable[int], i: int, j: int) -> frozenset[int]:
    both = instance.relevant_goods[i] & instance.relevant_goods[j]
    return frozenset(g for g in goods if g in both)


@dataclass(frozen=True)
class BoundProfile:
    """Tight (p, q) bounds; None stands for unbounded in declared profiles."""

    p: int | None
    q: int | None

    def within(self, p: int | None, q: int | None) -> bool:
        """True when these bounds fit inside the declared (p, q) class."""
        ok_p = p is None or (self.p is not None and self.p <= p)
        ok_q = q is None or (self.q is not None and self.q <= q)
        return ok_p and ok_q


def classify_bounds(instance: Instance) -> BoundProfile:
    p = max((len(s) for s in instance.interested_agents), default=0)
    rel = instance.relevant_goods
    q = max((len(rel[i] & rel[j]) for i, j in combinations(range(instance.num_agents), 2)), default=0)
    return BoundProfile(p, q)


def check_restricted_additive(instance: Instance) -> RestrictedCertificate | None:
    """Certificate of restricted additivity, or None when values disagree.

    Goods nobody values get inherent value 1. A table with no positive entry
    at all is rejected, since no inherent value is witnessed anywhere.
    """
    if instance.restricted is not None:
        return instance.restricted
    n, m = instance.num_agents, instance.num_goods
    if m > 0 and all(v == 0 for row in instance.values for v in row):
        raise DegenerateInstance("all-zero table: inherent values must be positive")
    inherent, relevance = [], []
    for g in range(m):
        col = {instance.values[i][g] for i in range(n)} - {0}
        if len(col) > 1:
            return None
        inherent.append(col.pop() if col else Fraction(1))
        relevance.append(frozenset(i for i in range(n) if instance.values[i][g] > 0))
    return RestrictedCertificate(tuple(inherent), tuple(relevance))


@dataclass(frozen=True)
class Allocation:
    pool: frozenset[int]
    bundles: tuple[frozenset[int], ...]

    def __post_init__(self):
        object.__setattr__(self, "pool", frozenset(self.pool))
        object.__setattr__(self, "bundles", tuple(frozenset(b) for b in self.bundles))

    @classmethod
    def empty(cls, n: int, m: int) -> "Allocation":
        return cls(frozenset(range(m)), tuple(frozenset() for _ in range(n)))

    @property
    def num_agents(self) -> int:
        return len(self.bundles)

    @property
    def complete(self) -> bool:
        return not self.pool

    def owner_vector(self, m: int) -> list[int]:
        """owner[g] = agent holding g, or n for the pool."""
        n = len(self.bundles)
        owner = [n] * m
        for i, b in enumerate(self.bundles):
            for g in b:
                owner[g] = i
        return owner

    def replace(self, changes: dict[int, Iterable[int]], pool: Iterable[int] | None = None) -> "Allocation":
        bundles = list(self.bundles)
        for i, b in changes.items():
            bundles[i] = frozenset(b)
        return Allocation(self.pool if pool is None else frozenset(pool), tuple(bundles))

    def to_lists(self) -> dict:
        return {"pool": sorted(self.pool), "bundles": [sorted(b) for b in self.bundles]}


def assert_partition(alloc: Allocation, num_goods: int) -> None:
    """Shared partition assertion: pool and bundles split 0..m-1 exactly."""
    seen: set[int] = set()
    for part in (alloc.pool, *alloc.bundles):
        for g in part:
            if not 0 <= g < num_goods:
                raise ValueError(f"good {g} out of range 0..{num_goods - 1}")
            if g in seen:
                raise ValueError(f"good {g} appears in two bundles")
            seen.add(g)
    if len(seen) != num_goods:
        missing = sorted(set(range(num_goods)) - seen)
        raise ValueError(f"goods {missing} are in no bundle")
