"""Acceptance criteria, one test each.

Every test records a PASS or FAIL line with its wall time and limit. The
lines print at the end of the pytest session (see conftest.py) and when
this file runs as a script. Each check recomputes what it can from the
allocation snapshots instead of trusting values the algorithms report.
"""

from __future__ import annotations

import functools
import os
import subprocess
import sys
import time
from fractions import Fraction
from pathlib import Path

import pytest

from fairdiv import graph, oracle
from fairdiv.algorithms import run
from fairdiv.cli import main as cli_main
from fairdiv.core import SQRT2, Allocation, BoundProfile, classify_bounds, value
from fairdiv.errors import SuperUnitCycle, UndefinedWeight
from fairdiv.fairness import check_alpha_efx, check_ef2x, check_named_property, potential
from fairdiv.formats import allocation_to_json, instance_to_json
from fairdiv.framework import minimal_subset_exceeding, most_envious_agent, seed_allocation
from fairdiv.generator import MODELS, GenSpec, XorShift64Star, corpus_specs, generate

sys.path.insert(0, str(Path(__file__).resolve().parent))
from _fixtures import HALL_FIXTURES, example_allocation, example_instance  # noqa: E402

RESULTS: dict[int, str] = {}
SUBSET_CHECK_MAX = 10  # largest bundle for the exponential subset oracle


def criterion(number: int, title: str, limit: float | None):
    def wrap(fn):
        @functools.wraps(fn)
        def test(*args, **kwargs):
            start = time.perf_counter()
            try:
                detail = fn(*args, **kwargs) or ""
            except BaseException as exc:
                took = time.perf_counter() - start
                RESULTS[number] = f"C{number} FAIL  {title} ({took:.2f} s): {type(exc).__name__}: {exc}"
                print(RESULTS[number])
                raise
            took = time.perf_counter() - start
            bound = f" / limit {limit:g} s" if limit is not None else ""
            if limit is not None and took >= limit:
                RESULTS[number] = f"C{number} FAIL  {title}: {took:.2f} s{bound}"
                print(RESULTS[number])
                pytest.fail(RESULTS[number])
            RESULTS[number] = f"C{number} PASS  {title}: {detail} ({took:.2f} s{bound})"
            print(RESULTS[number])

        return test

    return wrap


def _subset_checkable(alloc: Allocation) -> bool:
    return max((len(b) for b in alloc.bundles), default=0) <= SUBSET_CHECK_MAX


# ------------------------------------------------------------------ 1

@criterion(1, "worked example", 0.1)
def test_c1_worked_example():
    inst, a = example_instance(), example_allocation()
    assert classify_bounds(inst) == BoundProfile(2, 2)
    assert classify_bounds(inst.without_goods([0])) == BoundProfile(2, 1)
    assert [value(inst, i, a.bundles[i]) for i in range(4)] == [9, 10, 9, 10]
    G = graph.build(inst, a)
    ranks = graph.compute_ranks(G)
    # Agent 4 in 1-based numbering is id 3 here.
    assert ranks[3].rank == Fraction(10, 9)
    assert ranks[3].virtual_value == 9
    assert G.weight[(0, 1)] * G.weight[(1, 2)] * G.weight[(2, 3)] == Fraction(20, 27)
    return "bounds (2,2) and (2,1), values 9 10 9 10, rank 10/9, virtual value 9, product 20/27"


# ------------------------------------------------------------------ 2

@criterion(2, "CXXRA on 500 (inf,1)-bounded instances", 30)
def test_c2_cxxra():
    specs = corpus_specs("additive_infty1", 500, seed=2002)
    snapshots = 0
    for spec in specs:
        inst = generate(spec)
        r = run(inst, "cxxra")
        W = r.working
        for snap in [r.start] + [e.allocation for e in r.trace]:
            assert check_alpha_efx(W, snap, 1).passed, spec
            assert check_named_property(W, snap, "ddagger").passed, spec
            snapshots += 1
        assert r.pre_final_pool <= inst.num_agents // 2 - 1, spec
        res = r.allocation
        assert res.complete and check_ef2x(inst, res).passed, spec
        assert oracle.is_ef2x_by_subsets(inst, res), spec
    return f"500/500 EF2X, pool bound 500/500, {snapshots} states EFX and envied-hold-relevant"


# ------------------------------------------------------------------ 3

@criterion(3, "C-sqrt2-XRA on 500 restricted additive instances", 30)
def test_c3_sqrt2_ra():
    specs = corpus_specs("restricted_any", 500, seed=3003)
    rules = micro = dual = 0
    for spec in specs:
        inst = generate(spec)
        r = run(inst, "sqrt2-ra")
        W = r.working
        prev = potential(W, r.start, "sources")
        for e in r.trace:
            phi = potential(W, e.allocation, "sources")
            assert phi == e.phi and prev < phi, spec
            last = e.annotations["elimination_start"]
            for _, p in e.annotations["elimination"]:
                assert not p < last, spec
                last = p
                micro += 1
            assert last == phi, spec
            prev = phi
            rules += 1
        res = r.allocation
        assert res.complete and check_alpha_efx(inst, res, SQRT2).passed, spec
        if _subset_checkable(res):
            assert oracle.is_efx_by_subsets(inst, res, SQRT2), spec
            dual += 1
    return f"500/500 sqrt2/2-EFX ({dual} also by subsets), {rules} rules strictly up, {micro} micro-steps monotone"


# ------------------------------------------------------------------ 4

@criterion(4, "C-sqrt2-XPQ on 500 (inf,1)-bounded instances", 60)
def test_c4_sqrt2_pq():
    specs = corpus_specs("additive_infty1", 500, seed=4004)
    rules = dual = 0
    for spec in specs:
        inst = generate(spec)
        r = run(inst, "sqrt2-pq")
        W = r.working
        prev_alloc = r.start
        prev = graph.compute_ranks(graph.build(W, prev_alloc))
        for e in r.trace:
            notes = e.annotations
            path, i = notes["path"], notes["receiver"]
            rhat = {a: prev[a].rank for a in prev}
            for a, b in zip(path, path[1:]):
                rhat[a] = prev[b].rank
            rhat[i] = value(W, i, notes["subset"]) / prev[i].virtual_value
            assert rhat == notes["rhat"], spec
            G = graph.build(W, e.allocation)
            assert graph.feasible_rank_bound_check(G, rhat), spec
            ranks = graph.compute_ranks(G)
            assert all(ranks[a].virtual_value >= prev[a].virtual_value for a in ranks), spec
            assert oracle.nsw_key(W, e.allocation) > oracle.nsw_key(W, prev_alloc), spec
            prev_alloc, prev = e.allocation, ranks
            rules += 1
        res = r.allocation
        assert res.complete and check_alpha_efx(inst, res, SQRT2).passed, spec
        if _subset_checkable(res):
            assert oracle.is_efx_by_subsets(inst, res, SQRT2), spec
            dual += 1
    return f"500/500 sqrt2/2-EFX ({dual} also by subsets), {rules} rules with feasible witness, monotone virtual values, rising NSW"


# ------------------------------------------------------------------ 5

def _pqrax_key(W, alloc, N):
    zeros, prod = 0, Fraction(1)
    for a in N:
        v = value(W, a, alloc.bundles[a])
        if v == 0:
            zeros += 1
        else:
            prod *= v
    return (W.num_agents - len(N), -zeros, prod)


@criterion(5, "PQRAX on 500 (2,inf) restricted additive instances", 60)
def test_c5_pqrax():
    specs = corpus_specs("restricted_p2", 500, seed=5005)
    rules = dual = 0
    for spec in specs:
        inst = generate(spec)
        r = run(inst, "pqrax")
        W = r.working
        N = set(range(W.num_agents))
        prev = _pqrax_key(W, r.start, N)
        for e in r.trace:
            if "satisfied" in e.annotations:
                N.discard(e.annotations["satisfied"])
            key = _pqrax_key(W, e.allocation, N)
            assert prev < key, spec
            prev = key
            rules += 1
        res = r.allocation
        assert res.complete and check_alpha_efx(inst, res, 1).passed, spec
        if _subset_checkable(res):
            assert oracle.is_efx_by_subsets(inst, res), spec
            dual += 1
    return f"500/500 exact EFX ({dual} also by subsets), {rules} rules with rising (satisfied, NSW)"


# ------------------------------------------------------------------ 6

def _random_allocation(inst, rng: XorShift64Star, with_pool: bool) -> Allocation:
    """Each agent first gets a random free relevant good when one is left;
    the remaining goods go to uniform random owners."""
    n, m = inst.num_agents, inst.num_goods
    owners = [None] * m
    for a in rng.shuffle(list(range(n))):
        free = [g for g in sorted(inst.relevant_goods[a]) if owners[g] is None]
        if free:
            owners[free[rng.below(len(free))]] = a
    owners = [o if o is not None else rng.below(n + with_pool) for o in owners]
    bundles = [set() for _ in range(n + 1)]
    for g, o in enumerate(owners):
        bundles[o].add(g)
    return Allocation(frozenset(bundles[n]), tuple(frozenset(b) for b in bundles[:n]))


def _ranks_or_error(fn):
    try:
        return fn()
    except (SuperUnitCycle, UndefinedWeight) as exc:
        return type(exc).__name__


@criterion(6, "oracle equivalence on 200 random allocations", 60)
def test_c6_oracle_equivalence():
    rng = XorShift64Star(6006)
    defined = envy_checks = 0
    for k in range(200):
        model = MODELS[k % len(MODELS)]
        n = rng.randint(2, 5)
        m = rng.randint(n, 6)
        kw = {"p": 3, "q": 2} if model == "additive_pq" else {}
        inst = generate(GenSpec(n, m, model, seed=60_000 + k, **kw))
        a = _random_allocation(inst, rng, with_pool=bool(k % 2))

        fast = _ranks_or_error(lambda: graph.compute_ranks(graph.build(inst, a)))
        slow = _ranks_or_error(lambda: {i: oracle.brute_rank(inst, a, i) for i in range(n)})
        if isinstance(fast, str) or isinstance(slow, str):
            assert fast == slow, (k, fast, slow)
        else:
            assert {i: (e.rank, e.path) for i, e in fast.items()} == slow, k
            defined += 1

        for beta in (1, SQRT2):
            assert check_alpha_efx(inst, a, beta).passed == oracle.is_efx_by_subsets(inst, a, beta), k

        own = {i: value(inst, i, a.bundles[i]) for i in range(n)}
        envied = oracle.envied_by_someone(inst, own)
        S = a.pool | a.bundles[k % n]
        found = most_envious_agent(inst, a, S)
        if found is None:
            assert not envied(S), k
        else:
            agent, T = found
            assert T <= S and value(inst, agent, T) > own[agent], k
            assert oracle.is_inclusion_minimal(T, envied), k
            envy_checks += 1

        i = k % n
        everything = frozenset(range(m))
        total = value(inst, i, everything)
        if total > 0:
            thr = total / 2
            T = minimal_subset_exceeding(inst, i, everything, thr)
            assert oracle.is_inclusion_minimal(T, lambda X: value(inst, i, X) > thr), k
    assert defined >= 100, defined
    return f"ranks equal on {defined} defined cases and errors agree on the rest, EFX agrees 400/400, {envy_checks} minimal envied subsets"


# ------------------------------------------------------------------ 7

@criterion(7, "seeding on 200 instances with 20 Hall-deficient fixtures", 10)
def test_c7_seeding():
    cases = []
    rng = XorShift64Star(7007)
    for k in range(180):
        model = MODELS[k % len(MODELS)]
        n = rng.randint(2, 6)
        m = rng.randint(1, n + 3)
        kw = {"p": 3, "q": 2} if model == "additive_pq" else {}
        cases.append((generate(GenSpec(n, m, model, seed=70_000 + k, **kw)), False))
    cases += [(inst, True) for inst, _, _ in HALL_FIXTURES]
    fired = 0
    for inst, must_fire in cases:
        seed = seed_allocation(inst)
        rel = inst.relevant_goods
        survivors = seed.surviving_agents()
        for a in survivors:
            (g,) = seed.allocation.bundles[a]
            assert value(inst, a, {g}) > 0
        assert oracle.brute_super_unit_cycle(inst, seed.allocation, survivors) is None
        assert seed.removed_agents == oracle.hall_deficient_agents(inst)
        if seed.removed_agents:
            fired += 1
            goods = [g for _, g in seed.prematched]
            assert len(goods) == len(set(goods)) == len(seed.removed_goods)
            assert all(a in seed.removed_agents and g in rel[a] for a, g in seed.prematched)
            assert seed.removed_goods == set().union(*(rel[a] for a in seed.removed_agents))
            for a, g in seed.prematched:
                assert seed.allocation.bundles[a] == {g}
        elif must_fire:
            raise AssertionError("Hall reduction did not fire on a fixture")
    return f"200/200 seeded with positive singletons and no super-unit cycle, reduction fired on {fired} (all 20 fixtures)"


# ------------------------------------------------------------------ 8

def _cli(args, env_extra, cwd):
    env = dict(os.environ, **env_extra)
    return subprocess.run([sys.executable, "-m", "fairdiv", *args], env=env, cwd=cwd,
                          capture_output=True, text=True, check=False)


@criterion(8, "determinism of run and bench", None)
def test_c8_determinism(tmp_path, capsys):
    models = {"cxxra": "additive_infty1", "sqrt2-ra": "restricted_any",
              "sqrt2-pq": "additive_infty1", "pqrax": "restricted_p2"}
    for name, model in models.items():
        for spec in corpus_specs(model, 25, seed=8008):
            inst = generate(spec)
            a, b = run(inst, name), run(inst, name)
            assert allocation_to_json(a.allocation) == allocation_to_json(b.allocation)
            assert a.trace_jsonl() == b.trace_jsonl()

    outputs = []
    for workers in (1, 1, 2):
        out, tr = tmp_path / "o.jsonl", tmp_path / "t.jsonl"
        code = cli_main(["bench", "--alg", "pqrax", "--count", "40", "--seed", "11", "--workers", str(workers),
                         "--out", str(out), "--trace-out", str(tr)])
        assert code == 0
        outputs.append((capsys.readouterr().out, out.read_bytes(), tr.read_bytes()))
    assert outputs[0] == outputs[1] == outputs[2]

    # Fresh interpreters with different hash seeds.
    inst = tmp_path / "inst.json"
    inst.write_text(instance_to_json(generate(GenSpec(6, 14, "additive_infty1", seed=8))))
    runs = []
    for hs in ("1", "2"):
        d = tmp_path / hs
        d.mkdir()
        for name in ("sqrt2-pq", "cxxra"):
            p = _cli(["run", "--alg", name, "--in", str(inst), "--out", f"{name}.json", "--trace", f"{name}.jsonl"],
                     {"PYTHONHASHSEED": hs}, d)
            assert p.returncode == 0, p.stderr
        p = _cli(["bench", "--alg", "sqrt2-ra", "--count", "20", "--seed", "3", "--out", "b.jsonl",
                  "--trace-out", "bt.jsonl"], {"PYTHONHASHSEED": hs}, d)
        assert p.returncode == 0, p.stderr
        runs.append({f.name: f.read_bytes() for f in sorted(d.iterdir())} | {"report": p.stdout})
    assert runs[0] == runs[1]
    assert len(runs[0]) == 7
    return "4 x 25 runs, bench with 1/1/2 workers and two hash seeds all byte-identical"


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
