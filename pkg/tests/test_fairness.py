from fractions import Fraction

import pytest
from hypothesis import given, settings

from _fixtures import alloc, example_allocation, example_instance
from _strategies import instance_and_allocation
from fairdiv import graph, oracle
from fairdiv.core import SQRT2, Instance
from fairdiv.errors import UnknownProperty
from fairdiv.fairness import (
    INF,
    Potential,
    beta_strong_envy,
    check_alpha_efx,
    check_ef2x,
    check_efx,
    check_named_property,
    check_virtual_efx,
    compare,
    potential,
)
from fairdiv.framework import seed_allocation


def test_strong_envy_removes_the_cheapest_good():
    # Dropping the 1 still leaves 5 > 2, so agent 0 strongly envies even
    # though dropping the 5 would not.
    inst = Instance.from_table([[2, 5, 1], [1, 1, 1]])
    a = alloc({}, {0}, {1, 2})
    assert beta_strong_envy(inst, a, 0, 1) == 3
    assert not check_efx(inst, a).passed
    assert oracle.is_efx_by_subsets(inst, a) is False


def test_single_good_bundles_are_never_strongly_envied():
    inst = Instance.from_table([[0, 9], [1, 1]])
    assert beta_strong_envy(inst, alloc({}, {0}, {1}), 0, 1, beta=0) is None


def test_strong_envy_needs_two_agents():
    with pytest.raises(ValueError):
        beta_strong_envy(example_instance(), example_allocation(), 1, 1)


def test_sqrt2_margin_is_in_squared_units():
    inst = Instance.from_table([[2, 2, 3], [1, 1, 1]])
    a = alloc({}, {0}, {1, 2})
    # 3^2 - 2 * 2^2 = 1 > 0
    assert beta_strong_envy(inst, a, 0, 1, SQRT2) == 1
    assert check_alpha_efx(inst, a, SQRT2).violations[0].margin == 1
    assert check_alpha_efx(inst, alloc({}, {0}, {1, 2}), Fraction(3, 2)).passed


def test_ef2x_violation_has_two_good_witness():
    inst = Instance.from_table([[1, 1, 1, 5], [1, 1, 1, 1]])
    rep = check_ef2x(inst, alloc({}, {0}, {1, 2, 3}))
    (v,) = rep.violations
    assert (v.i, v.j, v.witness, v.margin) == (0, 1, (1, 2), 4)
    assert check_ef2x(inst, alloc({}, {3}, {0, 1, 2})).passed


def test_example_allocation_is_virtually_efx():
    inst, a = example_instance(), example_allocation()
    ranks = graph.compute_ranks(graph.build(inst, a))
    assert check_virtual_efx(inst, a, ranks).passed
    assert check_named_property(inst, a, "dagger").passed


def test_virtual_envy_is_reported():
    inst = Instance.from_table([[2, 3, 3], [0, 1, 1]])
    a = alloc({}, {0}, {1, 2})
    ranks = graph.compute_ranks(graph.build(inst, a))
    assert not check_virtual_efx(inst, a, ranks).passed


def test_seed_allocation_passes_named_properties():
    inst = example_instance()
    a = seed_allocation(inst).allocation
    for name in ("ddagger", "section", "uparrow", "dagger"):
        assert check_named_property(inst, a, name).passed, name


def test_non_source_with_irrelevant_good_fails_ddagger():
    inst = Instance.from_table([[1, 5, 0], [0, 1, 0], [0, 0, 1]])
    a = alloc({}, {0}, {1, 2}, set())
    rep = check_named_property(inst, a, "ddagger")
    assert not rep.passed and rep.violations[0].witness == (2,)


def test_super_unit_cycle_fails_dagger():
    inst = Instance.from_table([[1, 3], [2, 1]])
    rep = check_named_property(inst, alloc({}, {0}, {1}), "dagger")
    assert not rep.passed and rep.violations[0].note == "super-unit cycle"


def test_uparrow_reports_corresponding_agents():
    inst = example_instance()
    rep = check_named_property(inst, example_allocation(), "uparrow")
    assert rep.details["corresponding"] == {0: None, 1: 0, 2: None, 3: 2}
    assert not rep.passed


def test_unknown_property():
    with pytest.raises(UnknownProperty):
        check_named_property(example_instance(), example_allocation(), "nope")


def test_sources_potential_prefers_fewer_sources_on_equal_prefix():
    few = Potential("sources", (Fraction(3), INF))
    many = Potential("sources", (Fraction(3), Fraction(4), INF))
    assert many < few
    assert Potential("sources", (Fraction(2), Fraction(9), INF)) < many
    assert compare(few, few) == 0


def test_nsw_potential_counts_zeros_first():
    assert Potential("nsw", (1, Fraction(100))) < Potential("nsw", (0, Fraction(1)))
    assert Potential("pqrax", (0, 0, Fraction(99))) < Potential("pqrax", (1, 2, Fraction(1)))


def test_potentials_with_different_tags_do_not_compare():
    with pytest.raises(TypeError):
        Potential("nsw", (0, 1)) < Potential("cxxra", (1, 1))


def test_potential_of_example():
    inst, a = example_instance(), example_allocation()
    assert potential(inst, a, "nsw").payload == (0, 8100)
    assert potential(inst, a, "cxxra").payload == (38, 6)


@settings(max_examples=300)
@given(instance_and_allocation())
def test_efx_matches_subset_definition(case):
    inst, a = case
    assert check_alpha_efx(inst, a, 1).passed == oracle.is_efx_by_subsets(inst, a)
    assert check_alpha_efx(inst, a, SQRT2).passed == oracle.is_efx_by_subsets(inst, a, SQRT2)
    assert check_ef2x(inst, a).passed == oracle.is_ef2x_by_subsets(inst, a)
