"""Finite presheaves, matching families, the sheaf condition and local surjectivity"""
import logging
from dataclasses import dataclass, field
from typing import Dict, Hashable, Iterable, Iterator, List, Mapping, Optional, Sequence, Set, Tuple

from overtopos_sites.src.categories.fincat import (
    FinCategory,
    SetValuedFunctor,
    ValidationReport,
    opposite,
    render,
    validate_functor,
)
from overtopos_sites.src.errors import PreconditionError
from overtopos_sites.src.topologies.coverage import CoverageBasis, Presieve

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class FinPresheaf:
    """A contravariant set-valued functor, stored as a functor on the opposite category"""
    category: FinCategory
    functor: SetValuedFunctor

    @classmethod
    def build(cls, cat: FinCategory, sections: Mapping[str, Iterable[Hashable]],
              restrictions: Mapping[str, Mapping[Hashable, Hashable]], name: str = "") -> "FinPresheaf":
        return cls(cat, SetValuedFunctor.build(opposite(cat), sections, restrictions, name))

    @property
    def name(self) -> str:
        return self.functor.name

    def sections(self, obj: str) -> Tuple[Hashable, ...]:
        return self.functor.carrier(obj)

    def restrict(self, f: str, x: Hashable) -> Hashable:
        """Restriction along f: d -> c, sending P(c) to P(d)"""
        return self.functor.act(f, x)


def validate_presheaf(P: FinPresheaf) -> ValidationReport:
    return validate_functor(P.functor)


def representable(cat: FinCategory, c: str) -> FinPresheaf:
    """The presheaf hom(-, c)"""
    sections = {d: cat.hom(d, c) for d in cat.objects}
    restrictions = {f: {h: cat.compose(h, f) for h in cat.hom(cat.cod(f), c)} for f in cat.arrow_ids}
    return FinPresheaf.build(cat, sections, restrictions, f"y({c})")


def terminal_presheaf(cat: FinCategory) -> FinPresheaf:
    return FinPresheaf.build(cat, {d: [()] for d in cat.objects}, {f: {(): ()} for f in cat.arrow_ids}, "1")


@dataclass(frozen=True)
class MatchingFamily:
    """One section per arrow of a presieve, compatible along commuting pairs"""
    presieve: Presieve
    elements: Tuple[Tuple[str, Hashable], ...]

    def element(self, f: str) -> Hashable:
        return dict(self.elements)[f]


def commuting_pairs(cat: FinCategory, f: str, g: str) -> List[Tuple[str, str]]:
    """All (a, b) with f∘a = g∘b"""
    pairs = []
    for e in cat.objects:
        for a in cat.hom(e, cat.dom(f)):
            fa = cat.compose(f, a)
            for b in cat.hom(e, cat.dom(g)):
                if cat.compose(g, b) == fa:
                    pairs.append((a, b))
    return pairs


def matching_families(P: FinPresheaf, R: Presieve) -> Iterator[MatchingFamily]:
    """Every compatible family of sections over R"""
    cat = P.category
    arrows = list(R.sorted_arrows)
    pairs = {(f, g): commuting_pairs(cat, f, g) for f in arrows for g in arrows}

    def extend(index: int, chosen: Dict[str, Hashable]) -> Iterator[MatchingFamily]:
        if index == len(arrows):
            yield MatchingFamily(R, tuple((f, chosen[f]) for f in arrows))
            return
        f = arrows[index]
        for x in P.sections(cat.dom(f)):
            chosen[f] = x
            if all(P.restrict(a, chosen[g]) == P.restrict(b, x)
                   for g in arrows[:index + 1] for a, b in pairs[(g, f)]):
                yield from extend(index + 1, chosen)
            del chosen[f]

    yield from extend(0, {})


def amalgamations(P: FinPresheaf, family: MatchingFamily) -> List[Hashable]:
    return [x for x in P.sections(family.presieve.codomain)
            if all(P.restrict(f, x) == y for f, y in family.elements)]


@dataclass
class SheafReport:
    """Matching families with no or several amalgamations"""
    presheaf: str
    failures: List[Tuple[MatchingFamily, int]] = field(default_factory=list)
    families_checked: int = 0

    @property
    def valid(self) -> bool:
        return not self.failures

    def describe(self, limit: int = 20) -> List[str]:
        lines = []
        for family, count in self.failures[:limit]:
            parts = ", ".join(f"{f}:{render(x)}" for f, x in family.elements)
            lines.append(f"{family.presieve}: {{{parts}}} has {count} amalgamations")
        return lines


def sheaf_report(P: FinPresheaf, B: CoverageBasis) -> SheafReport:
    """Check unique amalgamation for every matching family on every basis presieve"""
    if B.category is not P.category and set(B.category.arrows) != set(P.category.arrows):
        raise PreconditionError("shared-site", f"{P.name} and {B.name} live on different categories")
    report = SheafReport(P.name)
    for R in B.all_families():
        for family in matching_families(P, R):
            report.families_checked += 1
            count = len(amalgamations(P, family))
            if count != 1:
                report.failures.append((family, count))
    logger.debug(f"Sheaf check of {P.name}: {report.families_checked} matching families, "
                 f"{len(report.failures)} failures")
    return report


def is_sheaf(P: FinPresheaf, B: CoverageBasis) -> bool:
    return sheaf_report(P, B).valid


@dataclass(frozen=True, eq=False)
class PresheafMap:
    """A natural transformation between finite presheaves on one category"""
    source: FinPresheaf
    target: FinPresheaf
    components: Mapping[str, Mapping[Hashable, Hashable]]
    name: str = ""

    def image(self, obj: str) -> Set[Hashable]:
        return set(self.components[obj].values())


def validate_presheaf_map(alpha: PresheafMap) -> ValidationReport:
    report = ValidationReport(alpha.name or "presheaf map")
    P, Q = alpha.source, alpha.target
    cat = P.category
    for c in cat.objects:
        table = alpha.components.get(c, {})
        targets = set(Q.sections(c))
        for x in P.sections(c):
            if x not in table or table[x] not in targets:
                report.add("component-typing", c, render(x))
    if not report.valid:
        return report
    for f in cat.arrow_ids:
        d, c = cat.arrows[f]
        for x in P.sections(c):
            if alpha.components[d][P.restrict(f, x)] != Q.restrict(f, alpha.components[c][x]):
                report.add("naturality", f, render(x))
    return report


def locally_in_image(Q: FinPresheaf, image: Mapping[str, Set[Hashable]], B: CoverageBasis) -> bool:
    """True iff every section of Q lands in image after restriction along some basis family"""
    for c in Q.category.objects:
        for y in Q.sections(c):
            if not any(all(Q.restrict(f, y) in image.get(Q.category.dom(f), ()) for f in R.arrows)
                       for R in B.at(c)):
                return False
    return True


def is_locally_surjective(alpha: PresheafMap, B: CoverageBasis) -> bool:
    cat = alpha.source.category
    return locally_in_image(alpha.target, {c: alpha.image(c) for c in cat.objects}, B)


def generated_image(Q: FinPresheaf, sections: Sequence[Tuple[str, Hashable]]) -> Dict[str, Set[Hashable]]:
    """The subpresheaf of Q generated by sections given as (object, section) pairs"""
    cat = Q.category
    image: Dict[str, Set[Hashable]] = {c: set() for c in cat.objects}
    for d, s in sections:
        for f in cat.arrows_into(d):
            image[cat.dom(f)].add(Q.restrict(f, s))
    return image


def jointly_locally_surjective(Q: FinPresheaf, sections: Sequence[Tuple[str, Hashable]],
                               B: CoverageBasis) -> bool:
    """Whether the map from the coproduct of representables picked out by sections is locally surjective"""
    return locally_in_image(Q, generated_image(Q, sections), B)


def sections_map(Q: FinPresheaf, sections: Sequence[Tuple[str, Hashable]]) -> PresheafMap:
    """The map ⊔ y(d_j) -> Q classifying the listed sections"""
    cat = Q.category
    coproduct_sections = {c: [(j, h) for j, (d, _) in enumerate(sections) for h in cat.hom(c, d)]
                          for c in cat.objects}
    restrictions = {f: {(j, h): (j, cat.compose(h, f))
                        for j, (d, _) in enumerate(sections) for h in cat.hom(cat.cod(f), d)}
                    for f in cat.arrow_ids}
    source = FinPresheaf.build(cat, coproduct_sections, restrictions, "coproduct")
    components = {c: {(j, h): Q.restrict(h, sections[j][1]) for j, h in coproduct_sections[c]}
                  for c in cat.objects}
    return PresheafMap(source, Q, components, f"sections->{Q.name}")
