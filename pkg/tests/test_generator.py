import shutil
import subprocess

import pytest

from fairdiv.core import check_restricted_additive, classify_bounds
from fairdiv.errors import InfeasibleSpec
from fairdiv.generator import MODELS, GenSpec, XorShift64Star, corpus, corpus_specs, generate, splitmix64

# First outputs for seed 42, produced by a standalone C implementation
# using native uint64 wraparound.
SEED42 = [0x31B0ECE7C4F697A2, 0x9008A3B1CB686F03, 0x7C7173ABD97BE16F, 0x45672C8C8D6B8C4F, 0xCDBD2CDF34DA70EA]

C_SOURCE = r"""
#include <stdio.h>
#include <stdint.h>
int main(void){
  uint64_t z = 42 + 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  uint64_t x = z ^ (z >> 31);
  for (int k = 0; k < 5; k++) {
    x ^= x >> 12; x ^= x << 25; x ^= x >> 27;
    printf("%llu\n", (unsigned long long)(x * 0x2545F4914F6CDD1DULL));
  }
}
"""


def test_splitmix64_reference_value():
    assert splitmix64(0)[1] == 0xE220A8397B1DCDAF


def test_xorshift_frozen_outputs():
    rng = XorShift64Star(42)
    assert [rng.next_u64() for _ in range(5)] == SEED42


@pytest.mark.skipif(shutil.which("cc") is None, reason="no C compiler")
def test_xorshift_matches_c(tmp_path):
    src = tmp_path / "xs.c"
    src.write_text(C_SOURCE)
    exe = tmp_path / "xs"
    subprocess.run(["cc", "-O2", str(src), "-o", str(exe)], check=True)
    out = subprocess.run([str(exe)], check=True, capture_output=True, text=True).stdout.split()
    assert [int(x) for x in out] == SEED42


def test_below_stays_in_range():
    rng = XorShift64Star(1)
    draws = [rng.below(7) for _ in range(2000)]
    assert set(draws) == set(range(7))
    with pytest.raises(ValueError):
        rng.below(0)


def test_restricted_p2_instance():
    inst = generate(GenSpec(4, 10, "restricted_p2", seed=7))
    assert classify_bounds(inst).p <= 2
    cert = check_restricted_additive(inst)
    assert cert is not None and inst.restricted is not None
    assert all(inst.relevant_goods[a] for a in range(4))


@pytest.mark.parametrize("seed", range(20))
def test_infty1_pairs_share_at_most_one_good(seed):
    inst = generate(GenSpec(6, 16, "additive_infty1", seed=seed))
    rel = inst.relevant_goods
    for a in range(6):
        for b in range(a + 1, 6):
            assert len(rel[a] & rel[b]) <= 1


def test_additive_pq_respects_both_bounds():
    for inst in corpus("additive_pq", 30, seed=2, p=3, q=2):
        prof = classify_bounds(inst)
        assert prof.p <= 3 and prof.q <= 2


def test_values_in_range():
    inst = generate(GenSpec(5, 12, "restricted_any", value_range=(3, 4), seed=1))
    vals = {v for row in inst.values for v in row if v}
    assert vals <= {3, 4}


@pytest.mark.parametrize("model", MODELS)
def test_generation_is_deterministic(model):
    kw = {"p": 2, "q": 1} if model == "additive_pq" else {}
    a = corpus(model, 10, seed=5, **kw)
    b = corpus(model, 10, seed=5, **kw)
    assert [x.values for x in a] == [x.values for x in b]
    assert corpus_specs(model, 10, 5, **kw) == corpus_specs(model, 10, 5, **kw)
    assert a[0].values != corpus(model, 1, seed=6, **kw)[0].values


@pytest.mark.parametrize(
    "spec",
    [
        GenSpec(3, 5, "unknown"),
        GenSpec(0, 5),
        GenSpec(3, -1),
        GenSpec(3, 5, value_range=(0, 4)),
        GenSpec(3, 5, value_range=(5, 4)),
        GenSpec(3, 5, "restricted_p2", p=3),
        GenSpec(3, 5, "additive_infty1", q=2),
        GenSpec(3, 5, "additive_pq", p=2),
        GenSpec(3, 5, "additive_pq", p=0, q=1),
    ],
)
def test_infeasible_specs(spec):
    with pytest.raises(InfeasibleSpec):
        generate(spec)


def test_empty_goods():
    inst = generate(GenSpec(3, 0, "restricted_any"))
    assert inst.num_goods == 0
