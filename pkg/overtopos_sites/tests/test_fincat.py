import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from overtopos_sites.src.categories.constructions import (
    category_of_elements,
    comma_category,
    compute_limit,
    cospan_diagram,
    empty_diagram,
    isomorphic_objects,
)
from overtopos_sites.src.categories.enumeration import enumerate_set_valued_functors, find_natural_isomorphism
from overtopos_sites.src.categories.fincat import (
    FinCategory,
    FinFunctor,
    SetValuedFunctor,
    discrete_category,
    opposite,
    render,
    validate_category,
    validate_functor,
)
from overtopos_sites.src.errors import PreconditionError
from overtopos_sites.tests.conftest import chain


def arrow_category() -> FinCategory:
    return FinCategory.build("arrow", ["x", "y"], {"f": ("x", "y")})


def test_build_completes_identities():
    cat = arrow_category()
    assert cat.identity("x") == "id_x"
    assert cat.compose("f", "id_x") == "f"
    assert cat.compose("id_y", "f") == "f"
    assert validate_category(cat).valid


def test_missing_composite_is_reported():
    cat = FinCategory.build("broken", ["x", "y", "z"], {"f": ("x", "y"), "g": ("y", "z")})
    report = validate_category(cat)
    assert not report.valid
    assert {v.law for v in report.violations} == {"composition-total"}
    assert report.violations[0].witness == ("g", "f")


def test_identity_law_violation():
    cat = FinCategory.build("bad", ["x", "y"], {"f": ("x", "y"), "h": ("x", "y")}, {("id_y", "f"): "h"})
    report = validate_category(cat)
    assert "left-identity" in {v.law for v in report.violations}


def test_poset_composition():
    cat = chain(3)
    assert cat.compose("1<=2", "0<=1") == "0<=2"
    assert cat.inverse("0<=1") is None
    assert cat.inverse("1<=1") == "1<=1"


@given(st.integers(min_value=1, max_value=5))
def test_chains_are_categories(n):
    cat = chain(n)
    assert validate_category(cat).valid
    assert len(cat.arrows) == n * (n + 1) // 2


def test_opposite_is_an_involution():
    cat = chain(3)
    twice = opposite(opposite(cat))
    assert dict(twice.arrows) == dict(cat.arrows)
    assert dict(twice.composition) == dict(cat.composition)
    assert opposite(cat).arrows["0<=1"] == ("1", "0")


def test_functor_validation():
    cat = arrow_category()
    collapse = FinFunctor(cat, cat, {"x": "y", "y": "y"}, {"f": "id_y", "id_x": "id_y", "id_y": "id_y"}, "collapse")
    assert validate_functor(collapse).valid
    wrong = FinFunctor(cat, cat, {"x": "x", "y": "x"}, {"f": "f", "id_x": "id_x", "id_y": "id_x"}, "wrong")
    assert "arrow-typing" in {v.law for v in validate_functor(wrong).violations}


def test_set_valued_functor_needs_total_actions():
    cat = arrow_category()
    G = SetValuedFunctor.build(cat, {"x": [0], "y": []}, {"f": {}}, "partial")
    assert "action-total" in {v.law for v in validate_functor(G).violations}


def test_meet_is_the_pullback(lattice):
    witness = compute_limit(lattice, cospan_diagram(lattice, "a<=1", "b<=1"))
    assert witness.apex == "0"
    assert witness.leg_map == {"0": "0<=a", "1": "0<=b", "2": "0<=1"}
    assert witness.cones_checked > 0


def test_terminal_object(lattice):
    assert compute_limit(lattice, empty_diagram(lattice)).apex == "1"
    assert compute_limit(discrete_category("two", ["p", "q"]), empty_diagram(discrete_category("two", ["p", "q"]))) is None


def test_isomorphic_objects(lattice):
    assert isomorphic_objects(lattice, "a", "a") == "a<=a"
    assert isomorphic_objects(lattice, "a", "b") is None


def test_category_of_elements():
    G = SetValuedFunctor.build(arrow_category(), {"x": [0, 1], "y": ["*"]}, {"f": {0: "*", 1: "*"}}, "G")
    el = category_of_elements(G)
    assert el.category.objects == ("x@0", "x@1", "y@*")
    assert len(el.category.arrows) == 5
    assert el.category.arrows["f@0"] == ("x@0", "y@*")
    assert el.projection.arr("f@1") == "f"
    assert validate_category(el.category).valid


def test_elements_with_the_same_rendering_are_rejected():
    G = SetValuedFunctor.build(arrow_category(), {"x": [1, "1"], "y": ["*"]}, {"f": {1: "*", "1": "*"}}, "G")
    with pytest.raises(PreconditionError) as error:
        category_of_elements(G)
    assert error.value.invariant == "element-ids"


def test_tuple_elements_render_with_brackets():
    assert render(("a", ("b", "c"))) == "[a,[b,c]]"
    assert render(()) == "[]"


def test_comma_of_identities_has_an_object_per_arrow():
    cat = arrow_category()
    ident = FinFunctor.identity(cat)
    comma = comma_category(ident, ident)
    assert len(comma.category.objects) == len(cat.arrows)
    assert "<x|y|f>" in comma.category.objects
    assert validate_category(comma.category).valid
    assert validate_functor(comma.left).valid and validate_functor(comma.right).valid


def test_functors_on_the_arrow_category():
    cat = arrow_category()
    assert len(enumerate_set_valued_functors(cat, 1)) == 3
    assert len(enumerate_set_valued_functors(cat, 2)) == 8


@settings(max_examples=9, deadline=None)
@given(st.integers(min_value=0, max_value=2), st.integers(min_value=0, max_value=2))
def test_functors_on_discrete_categories_are_size_vectors(n, k):
    cat = discrete_category(f"d{n}", [f"o{i}" for i in range(n)])
    assert len(enumerate_set_valued_functors(cat, k)) == (k + 1) ** n


def test_natural_isomorphism_search():
    cat = arrow_category()
    F = SetValuedFunctor.build(cat, {"x": [0, 1], "y": ["*"]}, {"f": {0: "*", 1: "*"}}, "F")
    G = SetValuedFunctor.build(cat, {"x": ["a", "b"], "y": ["c"]}, {"f": {"a": "c", "b": "c"}}, "G")
    H = SetValuedFunctor.build(cat, {"x": ["a", "b"], "y": ["c", "d"]}, {"f": {"a": "c", "b": "d"}}, "H")
    iso = find_natural_isomorphism(F, G)
    assert iso is not None and iso["y"] == {"*": "c"}
    assert find_natural_isomorphism(F, H) is None
