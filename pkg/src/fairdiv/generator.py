"""Seeded random instances for each valuation class.

Randomness comes from xorshift64* (Vigna 2016) seeded through splitmix64,
so corpora can be regenerated bit-for-bit in any language:

    splitmix64:  z += 0x9E3779B97F4A7C15
                 z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
                 z = (z ^ (z >> 27)) * 0x94D049BB133111EB
                 return z ^ (z >> 31)
    xorshift64*: x ^= x >> 12; x ^= x << 25; x ^= x >> 27
                 return x * 0x2545F4914F6CDD1D
    bounded draw below k: rejection on the top of the 64-bit range, then % k

All arithmetic is modulo 2**64.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

from .core import Instance, RestrictedCertificate, check_restricted_additive, classify_bounds
from .errors import InfeasibleSpec

MASK = (1 << 64) - 1
MODELS = ("restricted_p2", "restricted_any", "additive_infty1", "additive_pq")


def splitmix64(z: int) -> tuple[int, int]:
    z = (z + 0x9E3779B97F4A7C15) & MASK
    x = z
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK
    return z, x ^ (x >> 31)


class XorShift64Star:
    def __init__(self, seed: int):
        _, s = splitmix64(seed & MASK)
        self.state = s or 0x9E3779B97F4A7C15

    def next_u64(self) -> int:
        x = self.state
        x ^= x >> 12
        x ^= (x << 25) & MASK
        x ^= x >> 27
        self.state = x
        return (x * 0x2545F4914F6CDD1D) & MASK

    def below(self, k: int) -> int:
        """Uniform integer in [0, k)."""
        if k <= 0:
            raise ValueError("empty range")
        limit = (1 << 64) - ((1 << 64) % k)
        while True:
            r = self.next_u64()
            if r < limit:
                return r % k

    def randint(self, lo: int, hi: int) -> int:
        return lo + self.below(hi - lo + 1)

    def shuffle(self, xs: list) -> list:
        for i in range(len(xs) - 1, 0, -1):
            j = self.below(i + 1)
            xs[i], xs[j] = xs[j], xs[i]
        return xs


@dataclass(frozen=True)
class GenSpec:
    n: int
    m: int
    model: str = "restricted_p2"
    value_range: tuple[int, int] = (1, 20)
    p: int | None = None
    q: int | None = None
    seed: int = 0


def _validate(spec: GenSpec) -> tuple[int, int | None]:
    lo, hi = spec.value_range
    if spec.model not in MODELS:
        raise InfeasibleSpec(f"unknown model {spec.model!r}")
    if spec.n < 1:
        raise InfeasibleSpec("need at least one agent")
    if spec.m < 0:
        raise InfeasibleSpec("number of goods must be nonnegative")
    if lo < 1 or hi < lo:
        raise InfeasibleSpec(f"value range [{lo}, {hi}] must be positive and nonempty")
    p, q = spec.p, spec.q
    if spec.model == "restricted_p2":
        if p is not None and p != 2:
            raise InfeasibleSpec("restricted_p2 fixes p = 2")
        p = 2
    if spec.model == "additive_infty1":
        if q is not None and q != 1:
            raise InfeasibleSpec("additive_infty1 fixes q = 1")
        q = 1
    if spec.model == "additive_pq" and (p is None or q is None):
        raise InfeasibleSpec("additive_pq needs both --p and --q")
    if p is not None and p < 1 and spec.m > 0:
        raise InfeasibleSpec("p must be at least 1 when there are goods")
    if q is not None and q < 0:
        raise InfeasibleSpec("q must be nonnegative")
    return min(p if p is not None else spec.n, spec.n), q


def _relevance(spec: GenSpec, rng: XorShift64Star, p: int, q: int | None, retries: int = 32):
    n, m = spec.n, spec.m
    cover = rng.shuffle(list(range(n)))
    order = rng.shuffle(list(range(m)))
    shared: dict[tuple[int, int], int] = {}
    sets: list[frozenset[int]] = [frozenset()] * m
    for k, g in enumerate(order):
        size = 1 + rng.below(p)
        members = [cover[k]] if k < n else [rng.below(n)]
        for _ in range(retries):
            if len(members) >= size:
                break
            a = rng.below(n)
            if a in members:
                continue
            if q is not None and any(shared.get(tuple(sorted((a, b))), 0) >= q for b in members):
                continue
            members.append(a)
        if q is not None and len(members) == 1 and q < 0:
            raise InfeasibleSpec("pair bound cannot be met")
        for pair in combinations(sorted(members), 2):
            shared[pair] = shared.get(pair, 0) + 1
        sets[g] = frozenset(members)
    return sets


def generate(spec: GenSpec) -> Instance:
    """Deterministic instance for `spec`; every agent gets a relevant good
    when n <= m."""
    p, q = _validate(spec)
    rng = XorShift64Star(spec.seed)
    lo, hi = spec.value_range
    sets = _relevance(spec, rng, p, q)
    n, m = spec.n, spec.m
    rows = [[0] * m for _ in range(n)]
    cert = None
    if spec.model.startswith("restricted"):
        inherent = [rng.randint(lo, hi) for _ in range(m)]
        for g in range(m):
            for a in sets[g]:
                rows[a][g] = inherent[g]
        cert = RestrictedCertificate(tuple(inherent), tuple(sets))
    else:
        for g in range(m):
            for a in sorted(sets[g]):
                rows[a][g] = rng.randint(lo, hi)
    inst = Instance.from_table(rows, restricted=cert, model=spec.model)
    _verify(inst, spec, p, q)
    return inst


def _verify(inst: Instance, spec: GenSpec, p: int, q: int | None) -> None:
    prof = classify_bounds(inst)
    if prof.p > p or (q is not None and prof.q > q):
        raise InfeasibleSpec(f"generated bounds ({prof.p},{prof.q}) exceed ({p},{q})")
    if spec.model.startswith("restricted") and inst.num_goods and check_restricted_additive(inst) is None:
        raise InfeasibleSpec("generated instance is not restricted additive")
    if spec.n <= spec.m and any(not r for r in inst.relevant_goods):
        raise InfeasibleSpec("some agent has no relevant good")


def corpus_specs(model, count, seed, n_range=(2, 8), m_range=None, value_range=(1, 20), p=None, q=None):
    """`count` specs with n drawn from n_range and m from m_range, which
    defaults to [n, 2n + 4]. Each spec gets its own sub-seed."""
    rng = XorShift64Star(seed)
    out = []
    for k in range(count):
        n = rng.randint(*n_range)
        lo, hi = m_range if m_range is not None else (n, 2 * n + 4)
        m = rng.randint(lo, hi)
        out.append(GenSpec(n, m, model, tuple(value_range), p, q, (seed * 1_000_003 + k) & MASK))
    return out


def corpus(model, count, seed, **kw) -> list[Instance]:
    return [generate(s) for s in corpus_specs(model, count, seed, **kw)]
