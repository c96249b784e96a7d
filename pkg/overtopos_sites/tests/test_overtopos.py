import pytest
from hypothesis import given, reject, settings
from hypothesis import strategies as st

from overtopos_sites.src.errors import FragmentError, PreconditionError
from overtopos_sites.src.logic.fragment import FragmentArrow, compile_fragment
from overtopos_sites.src.logic.semantics import ModelHom
from overtopos_sites.src.logic.syntax import CoherentTheory, parse_in_context
from overtopos_sites.src.overtopos.points import hom_to_site_morphism
from overtopos_sites.src.overtopos.sites import (
    PresheafModel,
    agrees_with_set_based,
    antecedent_basis,
    antecedent_basis_general,
    check_cartesian,
    image_factorizations,
    validate_presheaf_model,
)
from overtopos_sites.src.sheaves.presheaves import is_sheaf, representable
from overtopos_sites.src.topologies.coverage import Presieve, check_basis, trivial_basis
from overtopos_sites.tests.conftest import OBJECTS, PAIR_ARROWS, X, XY, chain, frame, model, pairs_fragment


def test_antecedent_basis(pairs):
    over = antecedent_basis(pairs)
    assert len(over.elements.objects) == 1 + 2 + 4 + 2
    assert check_basis(over.elements, over.basis).valid
    assert check_cartesian(over).valid
    assert over.notes == ()
    assert over.element("X@[m0]") == ("X", ("m0",))

    target = "E@[m1,m1]"
    assert Presieve.of(target, ["e@[m1]"]) in over.basis.at(target)


def test_designated_cones_are_lifted(pairs):
    over = antecedent_basis(pairs)
    pullbacks = [cone for cone in over.cones if cone.diagram.source.objects]
    # one cone per square and compatible pair of elements
    expected = 0
    for square in pairs.squares:
        for a in pairs.interp.carrier(pairs.category.dom(square.f)):
            for b in pairs.interp.carrier(pairs.category.dom(square.g)):
                if pairs.interp.act(square.f, a) == pairs.interp.act(square.g, b):
                    expected += 1
    assert len(pullbacks) == expected
    assert over.cones[0].apex == "one@[]"


@pytest.mark.parametrize("size", [1, 2, 3])
def test_representables_are_sheaves(size):
    over = antecedent_basis(pairs_fragment(model(size)))
    for x in over.elements.objects:
        assert is_sheaf(representable(over.elements, x), over.basis), x


fragment_choices = st.tuples(
    st.integers(min_value=0, max_value=3),
    st.frozensets(st.integers(min_value=0, max_value=2)),
    st.frozensets(st.sampled_from(["X", "XX", "E", "P"])),
    st.booleans(),
)


def chosen_fragment(choice):
    """Fragments whose interpretation is cartesian; X and XX come with any formula over A"""
    size, marked, formulas, cover = choice
    if formulas & {"X", "E", "P"}:
        formulas = formulas | {"X", "XX"}
    try:
        return pairs_fragment(model(size, marked=marked), formulas, cover)
    except FragmentError as error:
        if error.invariant != "cartesian":
            raise
        reject()


@settings(max_examples=50, deadline=None)
@given(fragment_choices)
def test_antecedent_basis_is_a_basis(choice):
    frag = chosen_fragment(choice)
    over = antecedent_basis(frag)
    report = check_basis(over.elements, over.basis)
    assert report.valid, [v.describe() for v in report.violations[:5]]
    assert check_cartesian(over).valid


@settings(max_examples=50, deadline=None)
@given(fragment_choices)
def test_general_basis_over_the_point_agrees(choice):
    frag = chosen_fragment(choice)
    point = chain(1)
    presheaf_model = PresheafModel.constant(point, trivial_basis(point), frag)
    assert validate_presheaf_model(presheaf_model).valid
    general = antecedent_basis_general(presheaf_model)
    assert agrees_with_set_based(general, antecedent_basis(frag))


def test_general_basis_needs_sheaves(pairs, lattice, lattice_frame):
    presheaf_model = PresheafModel.constant(lattice, lattice_frame, pairs)
    with pytest.raises(PreconditionError) as error:
        antecedent_basis_general(presheaf_model)
    assert error.value.invariant == "sheaf-interpretation"


def test_general_basis_over_a_chain(pairs):
    base = chain(2)
    general = antecedent_basis_general(PresheafModel.constant(base, trivial_basis(base), pairs))
    assert check_basis(general.elements, general.basis).valid
    assert len(general.elements.objects) == 2 * 9
    with pytest.raises(PreconditionError):
        agrees_with_set_based(general, antecedent_basis(pairs))


def inhabited_fragment(size: int):
    """Objects with the sentence 'there is something' as the image of X"""
    theory = CoherentTheory("objects", OBJECTS)
    formulas = {
        "one": parse_in_context([], "top", OBJECTS),
        "X": parse_in_context(X, "top", OBJECTS),
        "XX": parse_in_context(XY, "top", OBJECTS),
        "I": parse_in_context([], "(exists ((w A)) top)", OBJECTS),
    }
    arrows = [FragmentArrow(name, dom, cod, parse_in_context(ctx, theta, OBJECTS))
              for name, (dom, cod, ctx, theta) in PAIR_ARROWS.items() if name in ("p1", "p2", "d", "sw")]
    arrows.append(FragmentArrow("c", "X", "I", parse_in_context(X, "top", OBJECTS)))
    return compile_fragment(theory, model(size), formulas, arrows, name="inhabited")


def test_image_factorizations():
    over = antecedent_basis(inhabited_fragment(2))
    found = {f.arrow: f for f in image_factorizations(over)}
    assert found["!X"].status == "factored"
    assert (found["!X"].image, found["!X"].cover, found["!X"].inclusion) == ("I", "c", "!I")
    assert found["c"].status == "factored"


def test_image_factorizations_skip_unlisted_images(pairs):
    results = image_factorizations(antecedent_basis(pairs))
    assert results
    assert all(r.status in ("skipped", "factored") for r in results)
    assert any(r.status == "skipped" for r in results)


def test_homs_induce_site_morphisms(pairs):
    M1, M2 = model(1), pairs.model
    inclusion = ModelHom(M1, M2, {"A": {"m0": "m0"}}, "include")
    report = hom_to_site_morphism(pairs, M1, M2, inclusion)
    assert report.valid
    assert report.functor.obj("XX@[m0,m0]") == "XX@[m0,m0]"

    collapse = ModelHom(M2, M1, {"A": {"m0": "m0", "m1": "m0"}}, "collapse")
    report = hom_to_site_morphism(pairs, M2, M1, collapse)
    assert report.valid
    assert report.functor.obj("XX@[m0,m1]") == "XX@[m0,m0]"


def test_site_morphism_needs_a_hom(pairs):
    partial = ModelHom(model(2), pairs.model, {"A": {"m0": "m0"}}, "partial")
    with pytest.raises(PreconditionError) as error:
        hom_to_site_morphism(pairs, model(2), pairs.model, partial)
    assert error.value.invariant == "hom"


def test_site_morphism_reports_covers_that_are_not_preserved():
    # covering one by X says every point has an element, which the inclusion of one element does not cover
    frag = pairs_fragment(model(2), ("one", "X", "XX"))
    frag = compile_fragment(frag.theory, frag.model, frag.formulas,
                            [frag.arrows[a] for a in ("p1", "p2", "d", "sw")], [("one", ["!X"])], name="inhabited")
    inclusion = ModelHom(model(1), frag.model, {"A": {"m0": "m0"}}, "include")
    report = hom_to_site_morphism(frag, model(1), frag.model, inclusion)
    assert report.preservation_failures
    assert report.comorphism_valid
    assert not report.valid
