"""Finite-limit preservation and cofilteredness checks"""
import logging
from typing import Iterable, Optional, Union

from overtopos_sites.src.categories.constructions import (
    LimitCone,
    category_of_elements,
    compute_limit,
    cospan_diagram,
    empty_diagram,
    is_limit,
    preserved_cone,
)
from overtopos_sites.src.categories.enumeration import preserves_limit_cone
from overtopos_sites.src.categories.fincat import FinCategory, FinFunctor, SetValuedFunctor, ValidationReport
from overtopos_sites.src.errors import InapplicableCheck

logger = logging.getLogger(__name__)


def cospans(cat: FinCategory):
    """Every pair (f, g) of arrows with a shared codomain, f <= g"""
    for c in cat.objects:
        into = cat.arrows_into(c)
        for i, f in enumerate(into):
            for g in into[i:]:
                yield f, g


def finite_limit_cones(cat: FinCategory) -> Iterable[LimitCone]:
    """The terminal cone and a limit cone over every cospan that has one"""
    terminal = empty_diagram(cat)
    witness = compute_limit(cat, terminal)
    if witness is None:
        raise InapplicableCheck(f"{cat.name} has no terminal object")
    yield LimitCone(terminal, witness)
    for f, g in cospans(cat):
        diagram = cospan_diagram(cat, f, g)
        witness = compute_limit(cat, diagram)
        if witness is not None:
            yield LimitCone(diagram, witness)


def is_cartesian_functor(F: Union[FinFunctor, SetValuedFunctor],
                         cones: Optional[Iterable[LimitCone]] = None) -> ValidationReport:
    """Check preservation of the terminal object and of every existing pullback

    When cones are given only those cones are checked.
    """
    report = ValidationReport(F.name or "functor")
    limit_cones = list(cones) if cones is not None else list(finite_limit_cones(F.source))
    for cone in limit_cones:
        label = "terminal" if not cone.diagram.source.objects else "pullback"
        if isinstance(F, SetValuedFunctor):
            holds = preserves_limit_cone(cone, F.carriers, F.actions)
        else:
            diagram, apex, legs = preserved_cone(F, cone)
            holds, _ = is_limit(F.target, diagram, apex, legs)
        if not holds:
            report.add(label, cone.apex, *[cone.diagram.arr(d) for d in cone.diagram.source.arrow_ids
                                           if not cone.diagram.source.is_identity(d)])
    logger.debug(f"Cartesian check of {report.subject}: {len(limit_cones)} cones, "
                 f"{len(report.violations)} failures")
    return report


def is_cofiltered_elements(G: SetValuedFunctor) -> ValidationReport:
    """Check that the category of elements of G is cofiltered"""
    el = category_of_elements(G).category
    report = ValidationReport(f"el({G.name})")
    if not el.objects:
        report.add("nonempty", el.name)
        return report
    for i, x in enumerate(el.objects):
        for y in el.objects[i + 1:]:
            if not any(el.hom(z, x) and el.hom(z, y) for z in el.objects):
                report.add("span", x, y)
    for f in el.arrow_ids:
        for g in el.hom(el.dom(f), el.cod(f)):
            if g <= f:
                continue
            if not any(el.compose(f, w) == el.compose(g, w) for w in el.arrows_into(el.dom(f))):
                report.add("equalizer", f, g)
    return report
