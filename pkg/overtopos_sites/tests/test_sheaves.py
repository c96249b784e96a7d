from overtopos_sites.src.categories.fincat import FinFunctor, SetValuedFunctor, discrete_category
from overtopos_sites.src.sheaves.cartesian import is_cartesian_functor, is_cofiltered_elements
from overtopos_sites.src.sheaves.presheaves import (
    FinPresheaf,
    is_locally_surjective,
    is_sheaf,
    jointly_locally_surjective,
    representable,
    sections_map,
    sheaf_report,
    terminal_presheaf,
    validate_presheaf,
    validate_presheaf_map,
)
from overtopos_sites.tests.conftest import chain, monotone


def two_sections(cat) -> FinPresheaf:
    """The constant presheaf with two sections"""
    return FinPresheaf.build(cat, {c: ["p", "q"] for c in cat.objects},
                             {f: {"p": "p", "q": "q"} for f in cat.arrow_ids}, "two")


def test_representables_are_sheaves_for_the_frame(lattice, lattice_frame):
    for c in lattice.objects:
        P = representable(lattice, c)
        assert validate_presheaf(P).valid
        assert is_sheaf(P, lattice_frame)
    assert is_sheaf(terminal_presheaf(lattice), lattice_frame)


def test_empty_cover_forces_a_single_section(lattice, lattice_frame, lattice_trivial):
    P = two_sections(lattice)
    report = sheaf_report(P, lattice_frame)
    assert not report.valid
    assert any("has 2 amalgamations" in line for line in report.describe())
    assert is_sheaf(P, lattice_trivial)
    print(f"\n{len(report.failures)} failures over {report.families_checked} matching families")


def test_representable_sections(lattice):
    P = representable(lattice, "a")
    assert P.sections("0") == ("0<=a",)
    assert P.sections("b") == ()
    assert P.restrict("0<=a", "a<=a") == "0<=a"


def test_sections_cover_the_top_locally(lattice, lattice_frame, lattice_trivial):
    one = terminal_presheaf(lattice)
    sections = [("a", ()), ("b", ())]
    assert jointly_locally_surjective(one, sections, lattice_frame)
    assert not jointly_locally_surjective(one, sections, lattice_trivial)

    alpha = sections_map(one, sections)
    assert validate_presheaf_map(alpha).valid
    assert is_locally_surjective(alpha, lattice_frame)
    assert not is_locally_surjective(alpha, lattice_trivial)


def test_surjective_map_is_locally_surjective(lattice, lattice_trivial):
    alpha = sections_map(two_sections(lattice), [("1", "p"), ("1", "q")])
    assert is_locally_surjective(alpha, lattice_trivial)


def test_cartesian_functors(lattice):
    two = chain(2)
    assert is_cartesian_functor(FinFunctor.identity(lattice)).valid
    collapse = monotone(lattice, two, {"0": "0", "a": "0", "b": "0", "1": "1"}, "collapse")
    assert is_cartesian_functor(collapse).valid
    merge = monotone(lattice, two, {"0": "0", "a": "1", "b": "1", "1": "1"}, "merge")
    report = is_cartesian_functor(merge)
    assert {v.law for v in report.violations} == {"pullback"}


def test_set_valued_cartesian_and_cofiltered(lattice):
    point = SetValuedFunctor.build(lattice, {c: [()] for c in lattice.objects},
                                   {f: {(): ()} for f in lattice.arrow_ids}, "pt")
    assert is_cartesian_functor(point).valid
    assert is_cofiltered_elements(point).valid

    doubled = SetValuedFunctor.build(lattice, {c: ["p", "q"] for c in lattice.objects},
                                     {f: {"p": "p", "q": "q"} for f in lattice.arrow_ids}, "doubled")
    assert not is_cartesian_functor(doubled).valid
    assert not is_cofiltered_elements(doubled).valid


def test_cofilteredness_needs_spans():
    pair = discrete_category("pair", ["x", "y"])
    point = SetValuedFunctor.build(pair, {"x": [()], "y": [()]}, {}, "pt")
    report = is_cofiltered_elements(point)
    assert [v.law for v in report.violations] == ["span"]
