"""Strict indexed categories and their Grothendieck construction"""
import logging
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Tuple

from overtopos_sites.src.categories.constructions import (
    ConeWitness,
    compute_limit,
    cospan_diagram,
    empty_diagram,
    is_limit,
)
from overtopos_sites.src.categories.fincat import (
    FinCategory,
    FinFunctor,
    ValidationReport,
    validate_category,
    validate_functor,
)
from overtopos_sites.src.errors import LimitMissing, PreconditionError

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class IndexedCategory:
    """A strict functor from the opposite of base into finite categories

    transitions[u] for u: c -> c' is the functor fibers[c'] -> fibers[c].
    """
    base: FinCategory
    fibers: Mapping[str, FinCategory]
    transitions: Mapping[str, FinFunctor]
    name: str = "I"

    def fiber(self, c: str) -> FinCategory:
        return self.fibers[c]

    def transition_of(self, u: str) -> FinFunctor:
        try:
            return self.transitions[u]
        except KeyError:
            raise PreconditionError("indexed-category", f"{self.name} has no transition for {u}")


def identity_transitions(base: FinCategory, fibers: Mapping[str, FinCategory],
                         transitions: Mapping[str, FinFunctor]) -> Dict[str, FinFunctor]:
    """Fill in identity functors for the identity arrows of base"""
    table = dict(transitions)
    for c, ident in base.identities.items():
        table.setdefault(ident, FinFunctor.identity(fibers[c]))
    return table


def validate_indexed_category(I: IndexedCategory) -> ValidationReport:
    report = ValidationReport(I.name)
    base = I.base
    report.extend(validate_category(base))
    for c in base.objects:
        if c not in I.fibers:
            report.add("fiber-missing", c)
            continue
        report.extend(validate_category(I.fibers[c]))
    if not report.valid:
        return report

    # Step 1: every transition is a functor between the right fibers
    for u in base.arrow_ids:
        F = I.transitions.get(u)
        if F is None:
            report.add("transition-missing", u)
            continue
        d, c = base.arrows[u]
        if set(F.source.objects) != set(I.fibers[c].objects) or set(F.target.objects) != set(I.fibers[d].objects):
            report.add("transition-typing", u)
            continue
        report.extend(validate_functor(F))
    if not report.valid:
        return report

    # Step 2: strict functoriality
    for c, ident in base.identities.items():
        F = I.transitions[ident]
        if any(F.obj(x) != x for x in I.fibers[c].objects) or any(F.arr(m) != m for m in I.fibers[c].arrows):
            report.add("transition-identity", ident)
    for (g, f), h in sorted(base.composition.items()):
        Ig, If, Ih = I.transitions[g], I.transitions[f], I.transitions[h]
        fiber = I.fibers[base.cod(g)]
        if any(If.obj(Ig.obj(x)) != Ih.obj(x) for x in fiber.objects) or \
                any(If.arr(Ig.arr(m)) != Ih.arr(m) for m in fiber.arrows):
            report.add("transition-composition", g, f)
    return report


def total_object_id(c: str, a: str) -> str:
    return f"<{c}|{a}>"


def total_arrow_id(u: str, m: str, target: str) -> str:
    return f"<{u}|{m}|{target}>"


@dataclass(frozen=True, eq=False)
class GrothendieckTotal:
    """The total category of an indexed category with its projection and cartesian lifts"""
    indexed: IndexedCategory
    category: FinCategory
    projection: FinFunctor
    lifts: Mapping[Tuple[str, str], str]
    points: Mapping[str, Tuple[str, str]]
    parts: Mapping[str, Tuple[str, str, str]]

    def object_of(self, c: str, a: str) -> str:
        return total_object_id(c, a)

    def lift(self, u: str, a: str) -> str:
        """The cartesian arrow over u ending at (cod u, a)"""
        return self.lifts[(u, a)]


def grothendieck_construction(I: IndexedCategory, name: Optional[str] = None) -> GrothendieckTotal:
    """Objects (c, a); arrows (u, m) with m: a -> I(u)(a'), composed as (u'u, I(u)(m')∘m)"""
    base = I.base
    points: Dict[str, Tuple[str, str]] = {}
    for c in base.objects:
        for a in I.fibers[c].objects:
            points[total_object_id(c, a)] = (c, a)

    arrows: Dict[str, Tuple[str, str]] = {}
    parts: Dict[str, Tuple[str, str, str]] = {}
    lifts: Dict[Tuple[str, str], str] = {}
    incoming: Dict[str, List[str]] = {}
    for u in base.arrow_ids:
        c, c2 = base.arrows[u]
        Iu = I.transition_of(u)
        fiber = I.fibers[c]
        for a2 in I.fibers[c2].objects:
            pulled = Iu.obj(a2)
            for m in fiber.arrows_into(pulled):
                arrow = total_arrow_id(u, m, a2)
                arrows[arrow] = (total_object_id(c, fiber.dom(m)), total_object_id(c2, a2))
                parts[arrow] = (u, m, a2)
                incoming.setdefault(arrows[arrow][1], []).append(arrow)
            lifts[(u, a2)] = total_arrow_id(u, fiber.identity(pulled), a2)

    identities = {total_object_id(c, a): total_arrow_id(base.identity(c), I.fibers[c].identity(a), a)
                  for c, a in points.values()}

    compose: Dict[Tuple[str, str], str] = {}
    for g, (y, _) in arrows.items():
        u2, m2, a3 = parts[g]
        for f in incoming.get(y, []):
            u, m, _ = parts[f]
            c = base.dom(u)
            m_total = I.fibers[c].compose(I.transition_of(u).arr(m2), m)
            compose[(g, f)] = total_arrow_id(base.compose(u2, u), m_total, a3)

    category = FinCategory(name or f"int({I.name})", tuple(sorted(points)), arrows, identities, compose)
    projection = FinFunctor(category, base, {x: p[0] for x, p in points.items()},
                            {f: p[0] for f, p in parts.items()}, "projection")
    logger.debug(f"Grothendieck construction of {I.name}: {len(points)} objects, {len(arrows)} arrows")
    return GrothendieckTotal(I, category, projection, lifts, points, parts)


def fiber_terminals(I: IndexedCategory) -> Dict[str, str]:
    terminals = {}
    for c in I.base.objects:
        fiber = I.fibers[c]
        witness = compute_limit(fiber, empty_diagram(fiber))
        if witness is None:
            raise LimitMissing(f"the fiber of {I.name} at {c} has no terminal object")
        terminals[c] = witness.apex
    return terminals


def terminal_lift_report(I: IndexedCategory, total: Optional[GrothendieckTotal] = None) -> ValidationReport:
    """Check that each cartesian lift sits in a pullback square over the terminal sections"""
    total = total or grothendieck_construction(I)
    cat = total.category
    base = I.base
    terminals = fiber_terminals(I)
    report = ValidationReport(f"terminal lifts of {I.name}")

    def bang(c: str, a: str) -> Optional[str]:
        arrows = I.fibers[c].hom(a, terminals[c])
        return arrows[0] if len(arrows) == 1 else None

    for u in base.arrow_ids:
        c1, c2 = base.arrows[u]
        Iu = I.transition_of(u)
        below = I.fibers[c1].hom(terminals[c1], Iu.obj(terminals[c2]))
        if len(below) != 1:
            report.add("transition-terminal", u, detail=f"{len(below)} arrows between terminal objects")
            continue
        bottom = total_arrow_id(u, below[0], terminals[c2])
        for a in I.fibers[c2].objects:
            pulled = Iu.obj(a)
            top = total.lift(u, a)
            right = total_arrow_id(base.identity(c2), bang(c2, a), terminals[c2])
            left = total_arrow_id(base.identity(c1), bang(c1, pulled), terminals[c1])
            diagram = cospan_diagram(cat, right, bottom)
            legs = {"0": top, "1": left, "2": cat.compose(right, top)}
            holds, _ = is_limit(cat, diagram, total_object_id(c1, pulled), legs)
            if not holds:
                report.add("terminal-lift-pullback", u, a)
    return report


def check_terminal_lift_pullback(I: IndexedCategory) -> bool:
    return terminal_lift_report(I).valid


def limit_in_total(total: GrothendieckTotal, diagram: FinFunctor) -> ConeWitness:
    """Build a limit in the total category from a base limit and a fiber limit"""
    I = total.indexed
    base = I.base
    shape = diagram.source

    # Step 1: limit of the projected diagram in the base
    projected = diagram.then(total.projection)
    base_limit = compute_limit(base, projected)
    if base_limit is None:
        raise LimitMissing(f"{base.name} has no limit of {diagram.name}")
    L = base_limit.apex
    p = base_limit.leg_map

    # Step 2: the pulled-back fiber diagram at L
    fiber = I.fibers[L]
    on_objects = {i: I.transition_of(p[i]).obj(total.points[diagram.obj(i)][1]) for i in shape.objects}
    on_arrows = {}
    for d in shape.arrows:
        i = shape.dom(d)
        _, m, _ = total.parts[diagram.arr(d)]
        on_arrows[d] = I.transition_of(p[i]).arr(m)
    fiber_diagram = FinFunctor(shape, fiber, on_objects, on_arrows, f"{diagram.name}@{L}")
    fiber_limit = compute_limit(fiber, fiber_diagram)
    if fiber_limit is None:
        raise LimitMissing(f"the fiber at {L} has no limit of the pulled-back diagram")
    q = fiber_limit.leg_map

    # Step 3: assemble and verify
    apex = total_object_id(L, fiber_limit.apex)
    legs = {i: total_arrow_id(p[i], q[i], total.points[diagram.obj(i)][1]) for i in shape.objects}
    holds, checked = is_limit(total.category, diagram, apex, legs)
    if not holds:
        raise PreconditionError("cartesian-stack", f"the assembled cone over {diagram.name} is not a limit")
    return ConeWitness(apex, tuple(sorted(legs.items())), checked)
