import pytest

from overtopos_sites.src.errors import FragmentError
from overtopos_sites.src.logic.axioms import emit_tm_axioms, sigma_m_signature
from overtopos_sites.src.logic.fragment import FragmentArrow, compile_fragment
from overtopos_sites.src.logic.semantics import check_model
from overtopos_sites.src.logic.syntax import CoherentTheory, parse_in_context
from overtopos_sites.src.sheaves.cartesian import is_cartesian_functor
from overtopos_sites.src.topologies.coverage import Presieve, check_basis
from overtopos_sites.tests.conftest import MARKED, OBJECTS, X, XY, XYZ, model, pairs_fragment

THEORY = CoherentTheory("objects", OBJECTS)


def formulas(**bodies):
    contexts = {"one": [], "X": X, "XX": XY, "E": XY}
    return {name: parse_in_context(contexts[name], body, OBJECTS) for name, body in bodies.items()}


def test_pairs_fragment(pairs):
    cat = pairs.category
    assert cat.objects == ("E", "X", "XX", "one")
    assert pairs.terminal == "one"
    assert pairs.covers == (Presieve.of("E", ["e"]),)
    assert {phi: len(pairs.interp.carrier(phi)) for phi in cat.objects} == {"E": 2, "X": 2, "XX": 4, "one": 1}
    print(f"\nCompiled {len(cat.arrows)} arrows with {len(pairs.companions)} companions")


def test_composition_is_decided_by_graphs(pairs):
    cat = pairs.category
    assert cat.compose("i", "e") == "d"
    assert cat.compose("p1", "d") == "id_X"
    assert cat.compose("sw", "sw") == "id_XX"
    assert cat.compose("p1", "sw") == "p2"
    assert cat.inverse("e") is not None
    assert cat.inverse("d") is None


def test_product_square_is_designated(pairs):
    square = pairs.square_for("!X", "!X")
    assert square is not None
    assert square.apex == "XX"
    assert {square.p1, square.p2} == {"p1", "p2"}
    assert pairs.product_formula(["A", "A"]) == "XX"
    assert pairs.sort_formula("A") == "X"


def test_fragment_basis_is_a_basis(pairs):
    assert check_basis(pairs.category, pairs.basis).valid
    assert Presieve.of("E", ["e"]) in pairs.basis.at("E")


def test_arrow_lookup_by_theta(pairs):
    theta = parse_in_context(XYZ, "(eq z x)", OBJECTS)
    assert pairs.arrow_for("XX", "X", theta) == "p1"
    not_functional = parse_in_context(XYZ, "top", OBJECTS)
    assert pairs.arrow_for("XX", "X", not_functional) is None


def test_missing_terminal_formula():
    with pytest.raises(FragmentError) as error:
        compile_fragment(THEORY, model(2), formulas(X="top"))
    assert error.value.invariant == "terminal-formula"


def test_duplicate_formula():
    duplicate = formulas(one="top", X="top")
    duplicate["Y"] = parse_in_context([("y", "A")], "top", OBJECTS)
    with pytest.raises(FragmentError) as error:
        compile_fragment(THEORY, model(2), duplicate)
    assert error.value.invariant == "duplicate-formula"


def test_arrow_must_be_functional():
    arrow = FragmentArrow("everything", "X", "X", parse_in_context(XY, "top", OBJECTS))
    with pytest.raises(FragmentError) as error:
        compile_fragment(THEORY, model(2), formulas(one="top", X="top"), [arrow])
    assert error.value.invariant == "functional"


def test_cover_must_be_jointly_surjective():
    diagonal = FragmentArrow("d", "X", "XX", parse_in_context(X + [("u", "A"), ("v", "A")],
                                                              "(and (eq u x) (eq v x))", OBJECTS))
    with pytest.raises(FragmentError) as error:
        compile_fragment(THEORY, model(2), formulas(one="top", X="top", XX="top"), [diagonal], [("XX", ["d"])])
    assert error.value.invariant == "surjective-cover"


def test_terminal_fragment():
    frag = compile_fragment(THEORY, model(2), formulas(one="top"), name="terminal")
    assert frag.category.objects == ("one",)
    assert len(frag.category.arrows) == 1
    assert len(emit_tm_axioms(frag).axioms) == 2


def test_fragment_must_interpret_as_a_cartesian_functor():
    # without XX the object X is a limit of the two copies of !X, but X x X is not X in a model of size 2
    with pytest.raises(FragmentError) as error:
        pairs_fragment(model(2), ("one", "X"))
    assert error.value.invariant == "cartesian"

    assert pairs_fragment(model(1), ("one", "X")).category.objects == ("X", "one")


@pytest.mark.parametrize("size", [0, 1, 2, 3])
def test_compiled_fragments_are_cartesian(size):
    frag = pairs_fragment(model(size))
    assert is_cartesian_functor(frag.interp).valid
    marked = marked_cover_fragment(model(1, marked=[0]))
    assert is_cartesian_functor(marked.interp).valid


def test_reinterpretation(pairs):
    larger = pairs.reinterpret(model(3))
    assert len(larger.interp.carrier("XX")) == 9
    assert larger.category is pairs.category
    assert check_model(model(3), pairs.fragment_theory).valid


def marked_cover_fragment(M):
    theory = CoherentTheory("marked", MARKED)
    fics = {"one": parse_in_context([], "top", MARKED), "X": parse_in_context(X, "top", MARKED),
            "P": parse_in_context(X, "(P x)", MARKED)}
    inclusion = FragmentArrow("m", "P", "X", parse_in_context(XY, "(and (P x) (eq y x))", MARKED))
    return compile_fragment(theory, M, fics, [inclusion], [("X", ["m"])], name="marked")


def test_fragment_theory_carries_the_covers():
    frag = marked_cover_fragment(model(1, marked=[0]))
    assert frag.square_for("m", "m").apex == "P"
    with pytest.raises(FragmentError) as error:
        frag.reinterpret(model(1, marked=[]))
    assert error.value.invariant == "fragment-theory"


def test_tm_axiom_count(pairs):
    theory = emit_tm_axioms(pairs)
    interp = pairs.interp
    cat = pairs.category
    pullback_instances = 0
    for square in pairs.squares:
        for a in interp.carrier(cat.dom(square.f)):
            for b in interp.carrier(cat.dom(square.g)):
                if interp.act(square.f, a) == interp.act(square.g, b):
                    pullback_instances += 1
    cover_instances = len(interp.carrier("E"))
    assert len(theory.axioms) == 2 + 3 * pullback_instances + cover_instances


def test_sigma_m_signature(pairs):
    sig = sigma_m_signature(pairs)
    assert len(sig.sorts) == 1 + 2 + 4 + 2
    assert "one@[]" in sig.sorts
    assert sig.functions["e@[m0]"] == (("X@[m0]",), "E@[m0,m0]")


def test_pairs_fragment_without_cover():
    frag = pairs_fragment(model(1), cover=False)
    assert frag.covers == ()
    assert len(emit_tm_axioms(frag).axioms) >= 2
