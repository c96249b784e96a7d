import pytest

from overtopos_sites.src.errors import PreconditionError
from overtopos_sites.src.logic.axioms import emit_tm_axioms, point_as_structure
from overtopos_sites.src.logic.semantics import ModelHom, check_model
from overtopos_sites.src.logic.syntax import CoherentTheory, parse_in_context
from overtopos_sites.src.logic.fragment import compile_fragment
from overtopos_sites.src.overtopos.points import (
    PointCandidate,
    check_continuous,
    check_correspondence,
    enumerate_homs,
    enumerate_points,
    hom_to_point,
    homs_isomorphic,
    point_to_hom,
    points_isomorphic,
)
from overtopos_sites.src.overtopos.sites import antecedent_basis
from overtopos_sites.src.sheaves.cartesian import is_cartesian_functor
from overtopos_sites.src.topologies.coverage import CoverageBasis
from overtopos_sites.tests.conftest import OBJECTS, model, pairs_fragment

CASES = [(size, k) for size in (1, 2, 3) for k in (0, 1, 2)]


def expected_classes(size: int, k: int) -> int:
    """Fibers over the pairs formula have the square of the fiber size, so only sizes 0 and 1 survive"""
    return 0 if k == 0 else 2 ** size


@pytest.mark.parametrize("size,k", CASES)
def test_points_correspond_to_homs(size, k):
    over = antecedent_basis(pairs_fragment(model(size)))
    report = check_correspondence(over, k)
    assert report.valid, report.failures
    assert report.points == report.homs == expected_classes(size, k)
    print(f"\n|M|={size}, k={k}: {report.points} classes")


@pytest.mark.parametrize("size", [1, 2])
def test_tm_axioms_hold_in_every_point(size):
    frag = pairs_fragment(model(size))
    over = antecedent_basis(frag)
    theory = emit_tm_axioms(frag)
    homs = enumerate_homs(frag, 2)
    assert homs
    for h in homs:
        point = hom_to_point(over, h.structure, h.hom)
        S = point_as_structure(theory.signature, point.functor)
        report = check_model(S, theory)
        assert report.valid, [v.describe() for v in report.violations[:3]]


def test_round_trip_on_the_identity(pairs):
    over = antecedent_basis(pairs)
    M = pairs.model
    point = hom_to_point(over, M, ModelHom.identity(M))
    assert point.is_point
    assert all(len(point.functor.carrier(x)) == 1 for x in over.elements.objects)
    back = point_to_hom(over, point)
    assert back.structure.size_vector() == M.size_vector()
    assert points_isomorphic(point, hom_to_point(over, back.structure, back.hom))


def test_enumerations_are_isomorphism_classes(pairs):
    over = antecedent_basis(pairs)
    points = enumerate_points(over, 1)
    for i, P in enumerate(points):
        for Q in points[i + 1:]:
            assert not points_isomorphic(P, Q)
    homs = enumerate_homs(pairs, 1)
    for i, h in enumerate(homs):
        for h2 in homs[i + 1:]:
            assert not homs_isomorphic(h, h2)


@pytest.mark.parametrize("size", [1, 2])
def test_enumerated_points_preserve_every_limit(size):
    over = antecedent_basis(pairs_fragment(model(size)))
    points = enumerate_points(over, 2)
    assert points
    for P in points:
        assert is_cartesian_functor(P.functor).valid


def test_hom_to_point_needs_a_hom(pairs):
    over = antecedent_basis(pairs)
    partial = ModelHom(model(2), pairs.model, {"A": {"m0": "m0"}}, "partial")
    with pytest.raises(PreconditionError) as error:
        hom_to_point(over, model(2), partial)
    assert error.value.invariant == "hom"


def test_point_to_hom_needs_a_point(pairs):
    over = antecedent_basis(pairs)
    point = hom_to_point(over, pairs.model, ModelHom.identity(pairs.model))
    forged = PointCandidate(point.functor, cartesian=True, continuous=False)
    with pytest.raises(PreconditionError) as error:
        point_to_hom(over, forged)
    assert error.value.invariant == "point-flags"


def test_point_to_hom_needs_sort_formulas():
    theory = CoherentTheory("objects", OBJECTS)
    frag = compile_fragment(theory, model(2), {"one": parse_in_context([], "top", OBJECTS)}, name="terminal")
    over = antecedent_basis(frag)
    (point,) = enumerate_points(over, 1)
    with pytest.raises(PreconditionError) as error:
        point_to_hom(over, point)
    assert error.value.invariant == "carrier-formulas"


def test_negative_bounds(pairs):
    over = antecedent_basis(pairs)
    with pytest.raises(ValueError):
        enumerate_points(over, -1)
    with pytest.raises(ValueError):
        enumerate_homs(pairs, -1)


def test_check_continuous(pairs):
    over = antecedent_basis(pairs)
    point = hom_to_point(over, pairs.model, ModelHom.identity(pairs.model))
    assert check_continuous(point.functor, over.basis)

    # the fiber over one@[] is inhabited, so the empty family there is not sent to a cover
    empty_at_one = CoverageBasis.build(over.elements, {"one@[]": [[]]})
    assert not check_continuous(point.functor, empty_at_one)
