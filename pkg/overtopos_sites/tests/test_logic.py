import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from overtopos_sites.src.errors import DocumentError, PreconditionError
from overtopos_sites.src.logic.semantics import (
    FinStructure,
    ModelHom,
    check_functional,
    check_hom,
    check_model,
    check_sequent,
    enumerate_structures,
    eval_formula,
    sequent_counterexample,
    validate_structure,
)
from overtopos_sites.src.logic.syntax import (
    TOP,
    CoherentTheory,
    FormulaInContext,
    Sequent,
    Signature,
    eq,
    exists,
    format_formula,
    free_vars,
    parse_formula,
    parse_in_context,
    substitute,
    var,
)
from overtopos_sites.tests.conftest import MARKED, OBJECTS, model

SUCCESSOR = Signature(("A",), {"s": (("A",), "A")}, {}, "successor")
AT_MOST_ONE = CoherentTheory("at-most-one", OBJECTS, (Sequent((("x", "A"), ("y", "A")), TOP, eq("x", "y")),))


def test_parse_and_format():
    text = "(and (eq x y) (P x))"
    formula = parse_formula(text, MARKED, ["x", "y"])
    assert format_formula(formula) == text
    assert free_vars(formula) == {"x", "y"}


def test_parse_binders():
    formula = parse_formula("(exists ((w A)) (and (P w) (eq w x)))", MARKED, ["x"])
    assert free_vars(formula) == {"x"}
    assert format_formula(formula) == "(exists ((w A)) (and (P w) (eq w x)))"


def test_parse_errors_carry_positions():
    with pytest.raises(DocumentError) as error:
        parse_formula("(eq x w)", OBJECTS, ["x"], source="axiom 0")
    assert (error.value.line, error.value.column) == (1, 7)
    assert str(error.value).startswith("axiom 0:1:7")
    with pytest.raises(DocumentError):
        parse_formula("(Q x)", MARKED, ["x"])
    with pytest.raises(DocumentError):
        parse_formula("(eq x", OBJECTS, ["x"])


def test_context_must_cover_free_variables():
    with pytest.raises(PreconditionError):
        FormulaInContext.of([("x", "A")], eq("x", "y")).check(OBJECTS)
    with pytest.raises(DocumentError):
        parse_in_context([("x", "B")], "top", OBJECTS)


def test_keys_identify_alpha_equivalent_formulas():
    first = FormulaInContext.of([("a", "A"), ("b", "A")], eq("b", "a"))
    second = FormulaInContext.of([("x", "A"), ("y", "A")], eq("x", "y"))
    assert first.key == second.key
    third = FormulaInContext.of([("x", "A"), ("y", "A")], TOP)
    assert first.key != third.key


def test_substitution_avoids_capture():
    formula = exists([("y", "A")], eq("x", "y"))
    result = substitute(formula, {"x": var("y")})
    assert free_vars(result) == {"y"}
    assert result.variables[0][0] != "y"


def test_eval_formula():
    M = model(3, marked=[0, 2])
    marked = eval_formula(M, parse_in_context([("x", "A")], "(P x)", MARKED))
    assert marked == frozenset({("m0",), ("m2",)})
    diagonal = eval_formula(M, parse_in_context([("x", "A"), ("y", "A")], "(eq x y)", MARKED))
    assert len(diagonal) == 3


def test_extents_are_remembered_per_structure():
    phi = parse_in_context([("x", "A")], "(P x)", MARKED)
    M, N = model(2, marked=[0]), model(2, marked=[1])
    assert eval_formula(M, phi) is eval_formula(M, phi)
    assert eval_formula(N, phi) == frozenset({("m1",)})
    assert list(M.extents) == [phi]
    assert list(N.extents) == [phi]
    assert model(2, marked=[0]).extents == {}


def test_function_symbols():
    swap = FinStructure.build(SUCCESSOR, {"A": [0, 1]}, {"s": {0: 1, 1: 0}}, name="swap")
    fixed = parse_in_context([("x", "A")], "(eq (s x) x)", SUCCESSOR)
    assert eval_formula(swap, fixed) == frozenset()
    twice = parse_in_context([("x", "A")], "(eq (s (s x)) x)", SUCCESSOR)
    assert len(eval_formula(swap, twice)) == 2


def test_partial_function_table_is_reported():
    broken = FinStructure.build(SUCCESSOR, {"A": [0, 1]}, {"s": {0: 1}}, name="broken")
    report = validate_structure(broken)
    assert [v.law for v in report.violations] == ["function-total"]


def test_sequent_counterexample():
    sigma = AT_MOST_ONE.axioms[0]
    assert sequent_counterexample(model(2), sigma) == ("m0", "m1")
    assert sequent_counterexample(model(1), sigma) is None
    report = check_model(model(2), AT_MOST_ONE)
    assert not report.valid
    assert report.violations[0].law == "axiom"


def test_enumerate_structures():
    models = enumerate_structures(AT_MOST_ONE, 3)
    assert sorted(M.size_vector() for M in models) == [(0,), (1,)]
    assert len(enumerate_structures(CoherentTheory("marked", MARKED), 1)) == 3


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=0, max_value=3), st.sets(st.integers(min_value=0, max_value=3)),
       st.sets(st.integers(min_value=0, max_value=3)))
def test_adding_relation_tuples_only_grows_positive_formulas(size, marked, extra):
    phi = parse_in_context([("x", "A"), ("y", "A")], "(or (P x) (exists ((z A)) (and (P z) (eq z y))))", MARKED)
    smaller = model(size, marked)
    larger = model(size, marked | extra)
    assert eval_formula(smaller, phi) <= eval_formula(larger, phi)


def test_homomorphisms_preserve_relations():
    N = model(2, marked=[0])
    M = model(1, marked=[])
    h = ModelHom(N, M, {"A": {"m0": "m0", "m1": "m0"}}, "collapse")
    phi = parse_in_context([("x", "A")], "(P x)", MARKED)
    result = check_hom(N, M, h, {"P": phi})
    assert not result.valid
    assert result.violations.violations[0].law == "hom-relation"
    assert result.naturality == {"P": False}

    marked_target = model(1, marked=[0])
    good = ModelHom(N, marked_target, {"A": {"m0": "m0", "m1": "m0"}}, "collapse")
    assert check_hom(N, marked_target, good, {"P": phi}).natural


def test_homomorphisms_need_total_maps():
    N, M = model(2), model(1)
    h = ModelHom(N, M, {"A": {"m0": "m0"}}, "partial")
    assert [v.law for v in check_hom(N, M, h).violations.violations] == ["hom-total"]


def test_signatures_must_match():
    with pytest.raises(PreconditionError):
        check_model(model(1, marked=[]), AT_MOST_ONE)


def test_check_sequent():
    sigma = AT_MOST_ONE.axioms[0]
    assert check_sequent(model(1), sigma)
    assert check_sequent(model(0), sigma)
    assert not check_sequent(model(3), sigma)


def test_check_functional():
    M = model(2)
    xy = parse_in_context([("x", "A"), ("y", "A")], "top", OBJECTS)
    x = parse_in_context([("x", "A")], "top", OBJECTS)
    projection = parse_in_context([("x", "A"), ("y", "A"), ("z", "A")], "(eq z x)", OBJECTS)
    diagonal = parse_in_context([("x", "A"), ("u", "A"), ("v", "A")], "(and (eq u x) (eq v x))", OBJECTS)
    anything = parse_in_context([("x", "A"), ("y", "A"), ("z", "A")], "top", OBJECTS)
    assert check_functional(M, projection, xy, x)
    assert check_functional(M, diagonal, x, xy)
    assert not check_functional(M, anything, xy, x)
    # total on a one-element carrier
    assert check_functional(model(1), anything, xy, x)

    with pytest.raises(PreconditionError):
        check_functional(M, x, x, x)
