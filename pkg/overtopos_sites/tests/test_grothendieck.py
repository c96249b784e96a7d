import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from overtopos_sites.src.categories.constructions import compute_limit, cospan_diagram, empty_diagram
from overtopos_sites.src.categories.fincat import FinCategory, FinFunctor, discrete_category
from overtopos_sites.src.fibrations.descent import check_descent
from overtopos_sites.src.fibrations.grothendieck import (
    IndexedCategory,
    check_terminal_lift_pullback,
    grothendieck_construction,
    identity_transitions,
    limit_in_total,
    validate_indexed_category,
)
from overtopos_sites.src.overtopos.sites import PresheafModel, element_stack
from overtopos_sites.src.sheaves.cartesian import cospans
from overtopos_sites.src.topologies.coverage import Presieve, trivial_basis
from overtopos_sites.tests.conftest import chain, monotone, square_lattice

BASES = {"chain1": chain(1), "chain2": chain(2), "chain3": chain(3), "chain4": chain(4), "L": square_lattice()}
POINT = chain(1)


def collapse(fiber: FinCategory) -> FinFunctor:
    return FinFunctor(fiber, POINT, {x: "0" for x in fiber.objects}, {f: "0<=0" for f in fiber.arrows}, "collapse")


def constant_indexed(base: FinCategory, fiber: FinCategory) -> IndexedCategory:
    transitions = {u: FinFunctor.identity(fiber) for u in base.arrows}
    return IndexedCategory(base, {c: fiber for c in base.objects}, transitions, f"const({fiber.name})")


def collapsed_at_bottom(base: FinCategory, fiber: FinCategory) -> IndexedCategory:
    """Fiber everywhere except a single object over the bottom element "0" """
    fibers = {c: POINT if c == "0" else fiber for c in base.objects}
    transitions = {}
    for u, (d, c) in base.arrows.items():
        if d == "0":
            transitions[u] = FinFunctor.identity(POINT) if c == "0" else collapse(fiber)
        else:
            transitions[u] = FinFunctor.identity(fiber)
    return IndexedCategory(base, fibers, transitions, f"collapsed({fiber.name})")


KINDS = {"constant": constant_indexed, "collapsed": collapsed_at_bottom}


def top_keeping(draw, source_size: int, target_size: int) -> list:
    """Values of a monotone map between chains that sends top to top"""
    lower = draw(st.lists(st.integers(min_value=0, max_value=target_size - 1),
                          min_size=source_size - 1, max_size=source_size - 1))
    return sorted(lower) + [target_size - 1]


@st.composite
def chain_stacks(draw) -> IndexedCategory:
    """Chains of fibers over a chain, reindexed by composites of random top-keeping maps"""
    base_size = draw(st.integers(min_value=1, max_value=4))
    base = chain(base_size)
    sizes = [draw(st.integers(min_value=1, max_value=3)) for _ in range(base_size)]
    fibers = {str(i): chain(n) for i, n in enumerate(sizes)}
    steps = [top_keeping(draw, sizes[k + 1], sizes[k]) for k in range(base_size - 1)]
    transitions = {}
    for u, (d, c) in base.arrows.items():
        values = list(range(sizes[int(c)]))
        for k in reversed(range(int(d), int(c))):
            values = [steps[k][v] for v in values]
        transitions[u] = monotone(fibers[c], fibers[d], {str(a): str(v) for a, v in enumerate(values)}, f"t({u})")
    return IndexedCategory(base, fibers, transitions, f"random{sizes}")


@st.composite
def lattice_stacks(draw) -> IndexedCategory:
    """Random chains over the square lattice with the point at the bottom"""
    base = square_lattice()
    fibers = {c: chain(draw(st.integers(min_value=1, max_value=3))) for c in ("a", "b", "1")}
    fibers["0"] = POINT
    top_size = len(fibers["1"].objects)
    transitions = {f"0<={c}": collapse(fibers[c]) for c in ("a", "b", "1")}
    for c in ("a", "b"):
        values = top_keeping(draw, top_size, len(fibers[c].objects))
        transitions[f"{c}<=1"] = monotone(fibers["1"], fibers[c], {str(a): str(v) for a, v in enumerate(values)},
                                          f"t({c}<=1)")
    return IndexedCategory(base, fibers, identity_transitions(base, fibers, transitions), "random-L")


GRID = [KINDS[kind](BASES[base], chain(size)) for base in sorted(BASES) for size in (1, 2, 3) for kind in sorted(KINDS)]


@settings(max_examples=60, deadline=None)
@given(st.one_of(st.sampled_from(GRID), chain_stacks(), lattice_stacks()))
def test_total_category_limits(I):
    assert validate_indexed_category(I).valid
    assert check_terminal_lift_pullback(I)

    total = grothendieck_construction(I)
    cat = total.category
    diagrams = [empty_diagram(cat)] + [cospan_diagram(cat, f, g) for f, g in cospans(cat)]
    for diagram in diagrams:
        assembled = limit_in_total(total, diagram)
        direct = compute_limit(cat, diagram)
        assert direct is not None
        assert assembled.apex == direct.apex


def test_total_of_a_constant_chain():
    two = chain(2)
    total = grothendieck_construction(constant_indexed(two, two))
    assert len(total.category.objects) == 4
    assert len(total.category.arrows) == 9
    assert total.lift("0<=1", "1") == "<0<=1|1<=1|1>"
    assert total.category.dom(total.lift("0<=1", "1")) == "<0|1>"
    assert total.projection.arr(total.lift("0<=1", "1")) == "0<=1"


def test_identity_transitions_are_completed():
    two = chain(2)
    fibers = {c: POINT for c in two.objects}
    transitions = identity_transitions(two, fibers, {"0<=1": FinFunctor.identity(POINT)})
    assert sorted(transitions) == ["0<=0", "0<=1", "1<=1"]
    assert validate_indexed_category(IndexedCategory(two, fibers, transitions)).valid


def test_missing_transitions_are_reported():
    two = chain(2)
    report = validate_indexed_category(IndexedCategory(two, {c: POINT for c in two.objects}, {}))
    assert {v.law for v in report.violations} == {"transition-missing"}


def test_point_stack_satisfies_descent(lattice, lattice_frame):
    I = constant_indexed(lattice, POINT)
    for family in lattice_frame.all_families():
        report = check_descent(I, family)
        assert report.valid, str(family)
        assert report.data_checked == 1


def test_discrete_fibers_fail_on_the_empty_cover(lattice, lattice_frame):
    I = constant_indexed(lattice, discrete_category("two", ["p", "q"]))
    report = check_descent(I, Presieve.of("0", []))
    assert report.data_checked == 1
    assert [reason for _, reason in report.failures] == ["non-unique-amalgamation"]

    covering = check_descent(I, Presieve.of("1", ["a<=1", "b<=1"]))
    assert covering.valid
    assert covering.data_checked == 2


def test_comparison_isomorphism_must_be_unique():
    swap = FinCategory.build("Z2", ["*"], {"s": ("*", "*")}, [("s", "s", "id_*")])
    I = constant_indexed(POINT, swap)
    # one amalgamation, but the swap is a second comparison with itself
    report = check_descent(I, Presieve.of("0", []))
    assert report.data_checked == 1
    assert [reason for _, reason in report.failures] == ["non-unique-amalgamation"]

    assert check_descent(I, Presieve.of("0", ["0<=0"])).valid


@pytest.mark.parametrize("size", [1, 2, 3])
def test_element_stacks_satisfy_descent(pairs, size):
    base = chain(size)
    basis = trivial_basis(base)
    I = element_stack(PresheafModel.constant(base, basis, pairs)).indexed
    assert validate_indexed_category(I).valid
    for family in basis.all_families():
        report = check_descent(I, family)
        assert report.valid
        assert report.data_checked == len(I.fiber(family.codomain).objects)
