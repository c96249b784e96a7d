"""The language of the category of elements and the axioms of the theory of homomorphisms into M"""
import logging
from typing import Dict, List, Optional

from overtopos_sites.src.categories.constructions import ElementsCategory, category_of_elements, element_id
from overtopos_sites.src.categories.fincat import SetValuedFunctor
from overtopos_sites.src.errors import PreconditionError
from overtopos_sites.src.logic.fragment import FragmentSite
from overtopos_sites.src.logic.semantics import FinStructure
from overtopos_sites.src.logic.syntax import (
    BOT,
    TOP,
    App,
    CoherentTheory,
    Eq,
    Sequent,
    Signature,
    Var,
    conj,
    disj,
    exists,
)

logger = logging.getLogger(__name__)


def elements_of(frag: FragmentSite) -> ElementsCategory:
    return category_of_elements(frag.interp, name=f"el({frag.name})")


def sigma_m_signature(frag: FragmentSite, elements: Optional[ElementsCategory] = None) -> Signature:
    """One sort per element object and one unary function symbol per element arrow"""
    el = elements or elements_of(frag)
    cat = el.category
    functions = {u: ((cat.dom(u),), cat.cod(u)) for u in cat.arrow_ids}
    return Signature(cat.objects, functions, {}, f"Sigma_{frag.model.name}")


def _apply(symbol: str, term) -> App:
    return App(symbol, (term,))


def emit_tm_axioms(frag: FragmentSite, M: Optional[FinStructure] = None) -> CoherentTheory:
    """Instances of the terminal, pullback and cover schemes over the fragment's data"""
    if M is not None and M is not frag.model:
        frag = frag.reinterpret(M)
    el = elements_of(frag)
    sig = sigma_m_signature(frag, el)
    interp = frag.interp
    cat = frag.category
    axioms: List[Sequent] = []

    # Step 1: the terminal object has exactly one element
    one = el.object_of(frag.terminal, ())
    axioms.append(Sequent((), TOP, exists([("x", one)], TOP)))
    axioms.append(Sequent((("x", one), ("y", one)), TOP, Eq(Var("x"), Var("y"))))

    # Step 2: designated pullbacks, one instance per pair of compatible elements
    for square in frag.squares:
        A, B = cat.dom(square.f), cat.dom(square.g)
        apex_of: Dict[tuple, object] = {}
        for u in interp.carrier(square.apex):
            apex_of[(interp.act(square.p1, u), interp.act(square.p2, u))] = u
        for a in interp.carrier(A):
            for b in interp.carrier(B):
                if interp.act(square.f, a) != interp.act(square.g, b):
                    continue
                u = apex_of.get((a, b))
                if u is None:
                    raise PreconditionError(
                        "pullback-object", f"no element of {square.apex} over ({a}, {b}) for {square.f}, {square.g}")
                P, X, Y = el.object_of(square.apex, u), el.object_of(A, a), el.object_of(B, b)
                p1, p2 = element_id(square.p1, u), element_id(square.p2, u)
                f, g = element_id(square.f, a), element_id(square.g, b)
                w, w2, x, y = Var("w"), Var("w2"), Var("x"), Var("y")
                axioms.append(Sequent(((w.name, P),), TOP,
                                      Eq(_apply(f, _apply(p1, w)), _apply(g, _apply(p2, w)))))
                axioms.append(Sequent(((x.name, X), (y.name, Y)), Eq(_apply(f, x), _apply(g, y)),
                                      exists([("w", P)], conj(Eq(_apply(p1, w), x), Eq(_apply(p2, w), y)))))
                axioms.append(Sequent(((w.name, P), (w2.name, P)),
                                      conj(Eq(_apply(p1, w), _apply(p1, w2)), Eq(_apply(p2, w), _apply(p2, w2))),
                                      Eq(w, w2)))

    # Step 3: every element of a covered object has an antecedent
    for family in frag.covers:
        members = [m for m in family.sorted_arrows if not cat.is_identity(m)]
        if not members:
            continue
        for a in interp.carrier(family.codomain):
            target = el.object_of(family.codomain, a)
            alternatives = []
            for m in members:
                for b in interp.carrier(cat.dom(m)):
                    if interp.act(m, b) == a:
                        source = el.object_of(cat.dom(m), b)
                        alternatives.append(exists([("y", source)], Eq(_apply(element_id(m, b), Var("y")), Var("x"))))
            axioms.append(Sequent((("x", target),), TOP, disj(*alternatives) if alternatives else BOT))
    logger.info(f"Emitted {len(axioms)} axioms over {len(sig.sorts)} sorts")
    return CoherentTheory(f"T_{frag.model.name}", sig, tuple(axioms))


def point_as_structure(signature: Signature, G: SetValuedFunctor, name: str = "S") -> FinStructure:
    """A set-valued functor on the category of elements, read as a structure for its language"""
    functions = {}
    for u in signature.functions:
        functions[u] = {(x,): G.act(u, x) for x in G.carrier(G.source.dom(u))}
    return FinStructure(signature, {s: tuple(G.carrier(s)) for s in signature.sorts}, functions, {}, name)
