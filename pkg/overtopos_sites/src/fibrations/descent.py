"""Exhaustive check of the descent condition for a strict indexed category"""
import itertools
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Tuple

from overtopos_sites.src.categories.constructions import compute_limit, cospan_diagram
from overtopos_sites.src.categories.fincat import FinCategory, FinFunctor
from overtopos_sites.src.errors import LimitMissing, PreconditionError
from overtopos_sites.src.fibrations.grothendieck import IndexedCategory
from overtopos_sites.src.topologies.coverage import Presieve, validate_presieve

logger = logging.getLogger(__name__)

# Three arrows into a common object: "0", "1", "2" --a, b, c--> "3"
TRIPLE_SHAPE = FinCategory.build("triple", ["0", "1", "2", "3"],
                                 {"a": ("0", "3"), "b": ("1", "3"), "c": ("2", "3")})

Pair = Tuple[str, str]


@dataclass(frozen=True)
class DescentDatum:
    """Objects over the members of a family and transition isomorphisms on their overlaps"""
    family: Presieve
    objects: Tuple[Tuple[str, str], ...]
    isos: Tuple[Tuple[Pair, str], ...]
    transcript: Tuple[str, ...] = ()

    def describe(self) -> str:
        objects = ", ".join(f"{f}:{x}" for f, x in self.objects)
        isos = ", ".join(f"{i},{j}:{t}" for (i, j), t in self.isos)
        return f"{{{objects}}} with {{{isos}}}"


@dataclass
class DescentReport:
    """Data enumerated over one family and those failing to glue uniquely"""
    family: Presieve
    data_checked: int = 0
    failures: List[Tuple[DescentDatum, str]] = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return not self.failures


@dataclass(frozen=True)
class _Overlap:
    apex: str
    first: str
    second: str


def isomorphisms(cat: FinCategory, x: str, y: str) -> List[str]:
    return [f for f in cat.hom(x, y) if cat.inverse(f) is not None]


def _mediating(base: FinCategory, overlap: _Overlap, source: str, first: str, second: str) -> str:
    for k in base.hom(source, overlap.apex):
        if base.compose(overlap.first, k) == first and base.compose(overlap.second, k) == second:
            return k
    raise LimitMissing(f"no mediating arrow from {source} into {overlap.apex}")


def _triple_diagram(base: FinCategory, f: str, g: str, h: str) -> FinFunctor:
    on_objects = {"0": base.dom(f), "1": base.dom(g), "2": base.dom(h), "3": base.cod(f)}
    on_arrows = {"a": f, "b": g, "c": h}
    for obj, ident in TRIPLE_SHAPE.identities.items():
        on_arrows[ident] = base.identity(on_objects[obj])
    return FinFunctor(TRIPLE_SHAPE, base, on_objects, on_arrows, f"triple({f},{g},{h})")


def check_descent(I: IndexedCategory, family: Presieve) -> DescentReport:
    """Enumerate every descent datum on family and test existence and essential uniqueness of gluings"""
    base = I.base
    problem = validate_presieve(base, family)
    if problem:
        raise PreconditionError("presieve-typing", f"{family}: {problem}")
    members = family.sorted_arrows
    c = family.codomain
    report = DescentReport(family)

    # Step 1: pairwise and triple overlaps in the base
    overlaps: Dict[Pair, _Overlap] = {}
    for f, g in itertools.product(members, repeat=2):
        witness = compute_limit(base, cospan_diagram(base, f, g))
        if witness is None:
            raise LimitMissing(f"{base.name} has no pullback of {f} and {g}")
        overlaps[(f, g)] = _Overlap(witness.apex, witness.leg("0"), witness.leg("1"))
    diagonals = {f: _mediating(base, overlaps[(f, f)], base.dom(f), base.identity(base.dom(f)),
                               base.identity(base.dom(f))) for f in members}
    triples: Dict[Tuple[str, str, str], Dict[Pair, str]] = {}
    for f, g, h in itertools.product(members, repeat=3):
        witness = compute_limit(base, _triple_diagram(base, f, g, h))
        if witness is None:
            raise LimitMissing(f"{base.name} has no wide pullback of {f}, {g} and {h}")
        legs = witness.leg_map
        triples[(f, g, h)] = {
            (f, g): _mediating(base, overlaps[(f, g)], witness.apex, legs["0"], legs["1"]),
            (g, h): _mediating(base, overlaps[(g, h)], witness.apex, legs["1"], legs["2"]),
            (f, h): _mediating(base, overlaps[(f, h)], witness.apex, legs["0"], legs["2"]),
        }

    pairs = list(itertools.product(members, repeat=2))

    def pulled(pair: Pair, objects: Dict[str, str]) -> Tuple[str, str]:
        overlap = overlaps[pair]
        return (I.transition_of(overlap.first).obj(objects[pair[0]]),
                I.transition_of(overlap.second).obj(objects[pair[1]]))

    def cocycles_hold(objects: Dict[str, str], isos: Dict[Pair, str], transcript: List[str]) -> bool:
        for f in members:
            if (f, f) not in isos:
                continue
            fiber = I.fibers[base.dom(f)]
            if I.transition_of(diagonals[f]).arr(isos[(f, f)]) != fiber.identity(objects[f]):
                return False
        for (f, g, h), mediators in triples.items():
            if not all(p in isos for p in mediators):
                continue
            apex = base.dom(mediators[(f, g)])
            fiber = I.fibers[apex]
            t = {p: I.transition_of(k).arr(isos[p]) for p, k in mediators.items()}
            if fiber.compose(t[(g, h)], t[(f, g)]) != t[(f, h)]:
                return False
            transcript.append(f"{g}{h}.{f}{g}={f}{h}")
        return True

    def amalgamations(objects: Dict[str, str], isos: Dict[Pair, str]) -> List[Tuple[str, Dict[str, str]]]:
        fiber_c = I.fibers[c]
        found = []
        for x in fiber_c.objects:
            options = [isomorphisms(I.fibers[base.dom(f)], I.transition_of(f).obj(x), objects[f]) for f in members]
            for choice in itertools.product(*options):
                psi = dict(zip(members, choice))
                if all(_glues(I, overlaps[p], isos[p], psi[p[0]], psi[p[1]]) for p in pairs):
                    found.append((x, psi))
        return found

    def essentially_unique(found: List[Tuple[str, Dict[str, str]]]) -> bool:
        """Each amalgamation is reached from the first by exactly one compatible isomorphism"""
        fiber_c = I.fibers[c]
        x0, psi0 = found[0]
        for x, psi in found:
            comparisons = [h for h in isomorphisms(fiber_c, x0, x)
                           if all(I.fibers[base.dom(f)].compose(psi[f], I.transition_of(f).arr(h)) == psi0[f]
                                  for f in members)]
            if len(comparisons) != 1:
                return False
        return True

    # Step 2: enumerate data with cocycle pruning, then glue
    def extend(index: int, objects: Dict[str, str], isos: Dict[Pair, str]) -> None:
        if index < len(members):
            f = members[index]
            for x in I.fibers[base.dom(f)].objects:
                objects[f] = x
                extend(index + 1, objects, isos)
                del objects[f]
            return
        position = index - len(members)
        if position < len(pairs):
            pair = pairs[position]
            source, target = pulled(pair, objects)
            for t in isomorphisms(I.fibers[overlaps[pair].apex], source, target):
                isos[pair] = t
                if cocycles_hold(objects, isos, []):
                    extend(index + 1, objects, isos)
                del isos[pair]
            return
        transcript: List[str] = []
        cocycles_hold(objects, isos, transcript)
        datum = DescentDatum(family, tuple(sorted(objects.items())), tuple(sorted(isos.items())),
                             tuple(transcript))
        report.data_checked += 1
        found = amalgamations(objects, isos)
        if not found:
            report.failures.append((datum, "no-amalgamation"))
        elif not essentially_unique(found):
            report.failures.append((datum, "non-unique-amalgamation"))

    extend(0, {}, {})
    logger.debug(f"Descent on {family}: {report.data_checked} data, {len(report.failures)} failures")
    return report


def _glues(I: IndexedCategory, overlap: _Overlap, t: str, psi_i: str, psi_j: str) -> bool:
    """t ∘ I(first)(ψ_i) = I(second)(ψ_j) in the fiber over the overlap"""
    fiber = I.fibers[overlap.apex]
    left = fiber.compose(t, I.transition_of(overlap.first).arr(psi_i))
    return left == I.transition_of(overlap.second).arr(psi_j)
