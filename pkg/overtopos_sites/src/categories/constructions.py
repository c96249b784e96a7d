"""Comma categories, categories of elements and finite limits by exhaustive search"""
import logging
from dataclasses import dataclass
from typing import Dict, Hashable, Iterable, Iterator, List, Mapping, Optional, Tuple

from overtopos_sites.src.categories.fincat import (
    FinCategory,
    FinFunctor,
    SetValuedFunctor,
    empty_category,
    render,
)
from overtopos_sites.src.errors import PreconditionError

logger = logging.getLogger(__name__)

# Shape of a cospan: "0" --p--> "2" <--q-- "1"
COSPAN_SHAPE = FinCategory.build("cospan", ["0", "1", "2"], {"p": ("0", "2"), "q": ("1", "2")})


@dataclass(frozen=True)
class ConeWitness:
    """A limit cone together with the size of the universal-property check behind it"""
    apex: str
    legs: Tuple[Tuple[str, str], ...]
    cones_checked: int = 0

    def leg(self, shape_object: str) -> str:
        return dict(self.legs)[shape_object]

    @property
    def leg_map(self) -> Dict[str, str]:
        return dict(self.legs)


@dataclass(frozen=True, eq=False)
class LimitCone:
    """A cone designated as a limit, kept together with its diagram"""
    diagram: FinFunctor
    witness: ConeWitness

    @property
    def apex(self) -> str:
        return self.witness.apex

    def leg(self, shape_object: str) -> str:
        return self.witness.leg(shape_object)


def empty_diagram(cat: FinCategory) -> FinFunctor:
    return FinFunctor(empty_category(), cat, {}, {}, "empty")


def cospan_diagram(cat: FinCategory, f: str, g: str) -> FinFunctor:
    """The diagram dom(f) --f--> X <--g-- dom(g)"""
    if cat.cod(f) != cat.cod(g):
        raise PreconditionError("cospan", f"{f} and {g} do not share a codomain")
    shape = COSPAN_SHAPE
    on_objects = {"0": cat.dom(f), "1": cat.dom(g), "2": cat.cod(f)}
    on_arrows = {"p": f, "q": g}
    for obj, ident in shape.identities.items():
        on_arrows[ident] = cat.identity(on_objects[obj])
    return FinFunctor(shape, cat, on_objects, on_arrows, f"cospan({f},{g})")


def square_legs(cat: FinCategory, f: str, p1: str, p2: str) -> Dict[str, str]:
    """Legs over cospan_diagram(cat, f, g) of the square with sides p1, p2"""
    return {"0": p1, "1": p2, "2": cat.compose(f, p1)}


def cones(cat: FinCategory, diagram: FinFunctor, apex: str) -> Iterator[Dict[str, str]]:
    """All cones over diagram with the given apex, in canonical order"""
    shape = diagram.source
    order = list(shape.objects)
    constraints = [(d, shape.dom(d), shape.cod(d)) for d in shape.arrow_ids if not shape.is_identity(d)]

    def extend(index: int, legs: Dict[str, str]) -> Iterator[Dict[str, str]]:
        if index == len(order):
            yield dict(legs)
            return
        i = order[index]
        for leg in cat.hom(apex, diagram.obj(i)):
            legs[i] = leg
            if all(cat.compose(diagram.arr(d), legs[s]) == legs[t]
                   for d, s, t in constraints if s in legs and t in legs):
                yield from extend(index + 1, legs)
            del legs[i]

    yield from extend(0, {})


def _factorizations(cat: FinCategory, apex: str, legs: Mapping[str, str], source: str,
                    cone: Mapping[str, str]) -> List[str]:
    return [u for u in cat.hom(source, apex)
            if all(cat.compose(legs[i], u) == cone[i] for i in legs)]


def is_limit(cat: FinCategory, diagram: FinFunctor, apex: str, legs: Mapping[str, str],
             cone_table: Optional[Mapping[str, List[Dict[str, str]]]] = None) -> Tuple[bool, int]:
    """Exhaustively check the universal property of a cone; returns (holds, cones checked)"""
    if set(legs) != set(diagram.source.objects):
        return False, 0
    for d in diagram.source.arrow_ids:
        s, t = diagram.source.arrows[d]
        if cat.compose(diagram.arr(d), legs[s]) != legs[t]:
            return False, 0
    checked = 0
    for source in cat.objects:
        candidates = cone_table[source] if cone_table is not None else cones(cat, diagram, source)
        for cone in candidates:
            checked += 1
            if len(_factorizations(cat, apex, legs, source, cone)) != 1:
                return False, checked
    return True, checked


def preserved_cone(F: FinFunctor, cone: LimitCone) -> Tuple[FinFunctor, str, Dict[str, str]]:
    """The image of a cone under F, as (diagram, apex, legs) in the target of F"""
    diagram = cone.diagram
    image = FinFunctor(diagram.source, F.target,
                       {i: F.obj(diagram.obj(i)) for i in diagram.source.objects},
                       {d: F.arr(diagram.arr(d)) for d in diagram.source.arrows},
                       f"{F.name}({diagram.name})")
    return image, F.obj(cone.apex), {i: F.arr(leg) for i, leg in cone.witness.legs}


def compute_limit(cat: FinCategory, diagram: FinFunctor) -> Optional[ConeWitness]:
    """Find a limit cone over diagram by checking every cone in cat"""
    if diagram.target is not cat and any(diagram.arr(f) not in cat.arrows for f in diagram.source.arrows):
        raise PreconditionError("diagram-in-category", f"{diagram.name} does not land in {cat.name}")
    cone_table = {x: list(cones(cat, diagram, x)) for x in cat.objects}
    for apex in cat.objects:
        for legs in cone_table[apex]:
            holds, checked = is_limit(cat, diagram, apex, legs, cone_table)
            if holds:
                logger.debug(f"Limit of {diagram.name} in {cat.name}: {apex} ({checked} cones checked)")
                return ConeWitness(apex, tuple(sorted(legs.items())), checked)
    return None


def isomorphic_objects(cat: FinCategory, x: str, y: str) -> Optional[str]:
    """Return an isomorphism x -> y, if any"""
    for f in cat.hom(x, y):
        if cat.inverse(f) is not None:
            return f
    return None


@dataclass(frozen=True, eq=False)
class CommaCategory:
    """A comma category (F ↓ G) with its two projections"""
    category: FinCategory
    left: FinFunctor
    right: FinFunctor
    triples: Mapping[str, Tuple[str, str, str]]
    index: Mapping[Tuple[str, str, str], str]


def comma_object_id(a: str, b: str, alpha: str) -> str:
    return f"<{a}|{b}|{alpha}>"


def comma_arrow_id(s: str, t: str, x: str, y: str) -> str:
    return f"<{s}|{t}>:{x}->{y}"


def comma_category(F: FinFunctor, G: FinFunctor, name: Optional[str] = None) -> CommaCategory:
    """Objects (a, b, α: F a -> G b); arrows are pairs (s, t) making the square commute"""
    if F.target is not G.target:
        raise PreconditionError("shared-target", f"{F.name} and {G.name} have different targets")
    C, A, B = F.target, F.source, G.source
    triples: Dict[str, Tuple[str, str, str]] = {}
    for a in A.objects:
        for b in B.objects:
            for alpha in C.hom(F.obj(a), G.obj(b)):
                triples[comma_object_id(a, b, alpha)] = (a, b, alpha)

    arrows: Dict[str, Tuple[str, str]] = {}
    parts: Dict[str, Tuple[str, str]] = {}
    by_parts: Dict[Tuple[str, str, str, str], str] = {}
    identities: Dict[str, str] = {}
    for x, (a, b, alpha) in triples.items():
        for y, (a2, b2, alpha2) in triples.items():
            for s in A.hom(a, a2):
                for t in B.hom(b, b2):
                    if C.compose(G.arr(t), alpha) != C.compose(alpha2, F.arr(s)):
                        continue
                    arrow = comma_arrow_id(s, t, x, y)
                    arrows[arrow] = (x, y)
                    parts[arrow] = (s, t)
                    by_parts[(s, t, x, y)] = arrow
                    if x == y and s == A.identity(a) and t == B.identity(b):
                        identities[x] = arrow

    outgoing: Dict[str, List[str]] = {}
    for f, (x, _) in arrows.items():
        outgoing.setdefault(x, []).append(f)
    compose: Dict[Tuple[str, str], str] = {}
    for f, (x, y) in arrows.items():
        s, t = parts[f]
        for g in outgoing.get(y, []):
            s2, t2 = parts[g]
            z = arrows[g][1]
            compose[(g, f)] = by_parts[(A.compose(s2, s), B.compose(t2, t), x, z)]

    category = FinCategory(name or f"({F.name}|{G.name})", tuple(sorted(triples)), arrows, identities, compose)
    left = FinFunctor(category, A, {x: t[0] for x, t in triples.items()},
                      {f: parts[f][0] for f in arrows}, "left")
    right = FinFunctor(category, B, {x: t[1] for x, t in triples.items()},
                       {f: parts[f][1] for f in arrows}, "right")
    index = {t: x for x, t in triples.items()}
    return CommaCategory(category, left, right, triples, index)


@dataclass(frozen=True, eq=False)
class ElementsCategory:
    """The category of elements of a set-valued functor"""
    category: FinCategory
    projection: FinFunctor
    points: Mapping[str, Tuple[str, Hashable]]
    index: Mapping[Tuple[str, Hashable], str]
    functor: SetValuedFunctor

    def object_of(self, obj: str, element: Hashable) -> str:
        return self.index[(obj, element)]

    def arrow_of(self, arrow: str, element: Hashable) -> str:
        return element_id(arrow, element)


def element_id(name: str, element: Hashable) -> str:
    return f"{name}@{render(element)}"


def category_of_elements(M: SetValuedFunctor, name: Optional[str] = None) -> ElementsCategory:
    """Objects (c, x ∈ M(c)); an arrow u: c -> c' gives (c, x) -> (c', M(u)(x))"""
    src = M.source
    points: Dict[str, Tuple[str, Hashable]] = {}
    index: Dict[Tuple[str, Hashable], str] = {}
    for c in src.objects:
        for x in M.carrier(c):
            obj = element_id(c, x)
            if obj in points:
                raise PreconditionError("element-ids", f"{points[obj]} and {(c, x)} both render as {obj}")
            points[obj] = (c, x)
            index[(c, x)] = obj

    arrows: Dict[str, Tuple[str, str]] = {}
    projection_arrows: Dict[str, str] = {}
    for u in src.arrow_ids:
        d, c = src.arrows[u]
        for x in M.carrier(d):
            arrow = element_id(u, x)
            if arrow in arrows:
                raise PreconditionError("element-ids", f"two arrows render as {arrow}")
            arrows[arrow] = (index[(d, x)], index[(c, M.act(u, x))])
            projection_arrows[arrow] = u
    identities = {index[(c, x)]: element_id(src.identity(c), x) for (c, x) in index}

    compose: Dict[Tuple[str, str], str] = {}
    for f, (x_obj, y_obj) in arrows.items():
        u = projection_arrows[f]
        x = points[x_obj][1]
        y = points[y_obj][1]
        for v in src.arrows_from(src.cod(u)):
            compose[(element_id(v, y), f)] = element_id(src.compose(v, u), x)

    category = FinCategory(name or f"el({M.name})", tuple(sorted(points)), arrows, identities, compose)
    projection = FinFunctor(category, src, {x: p[0] for x, p in points.items()}, projection_arrows,
                            "projection")
    return ElementsCategory(category, projection, points, index, M)

