"""Presieves, sieves and coverage bases on finite categories"""
import itertools
import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Set, Tuple, Union

from overtopos_sites.config.config import MAX_BASIS_FAMILIES, MAX_SUBSET_ARROWS
from overtopos_sites.src.categories.fincat import FinCategory, FinFunctor
from overtopos_sites.src.errors import BasisClosureError, PreconditionError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Presieve:
    """A finite family of arrows with a common codomain"""
    codomain: str
    arrows: FrozenSet[str]

    @classmethod
    def of(cls, codomain: str, arrows: Iterable[str]) -> "Presieve":
        return cls(codomain, frozenset(arrows))

    @property
    def sorted_arrows(self) -> Tuple[str, ...]:
        return tuple(sorted(self.arrows))

    @property
    def key(self) -> Tuple[str, Tuple[str, ...]]:
        return self.codomain, self.sorted_arrows

    def __str__(self) -> str:
        return "{" + ", ".join(self.sorted_arrows) + "} -> " + self.codomain


@dataclass(frozen=True)
class Sieve:
    """A presieve closed under precomposition"""
    codomain: str
    arrows: FrozenSet[str]

    def contains(self, presieve: Presieve) -> bool:
        return presieve.arrows <= self.arrows

    @property
    def sorted_arrows(self) -> Tuple[str, ...]:
        return tuple(sorted(self.arrows))


FamilySpec = Union[Presieve, Iterable[str]]


@dataclass(frozen=True, eq=False)
class CoverageBasis:
    """Per-object presieve families, stored in canonical order"""
    category: FinCategory
    families: Mapping[str, Tuple[Presieve, ...]]
    name: str = ""
    generators: Optional[Mapping[str, Tuple[Presieve, ...]]] = None

    @classmethod
    def build(cls, cat: FinCategory, families: Mapping[str, Iterable[FamilySpec]], name: str = "",
              generators: Optional[Mapping[str, Iterable[Presieve]]] = None) -> "CoverageBasis":
        table: Dict[str, Tuple[Presieve, ...]] = {}
        for obj in cat.objects:
            presieves = {spec if isinstance(spec, Presieve) else Presieve.of(obj, spec)
                         for spec in families.get(obj, ())}
            table[obj] = tuple(sorted(presieves, key=lambda p: p.key))
        gens = None
        if generators is not None:
            gens = {obj: tuple(sorted(set(generators.get(obj, ())), key=lambda p: p.key)) for obj in cat.objects}
        return cls(cat, table, name, gens)

    def at(self, obj: str) -> Tuple[Presieve, ...]:
        return self.families.get(obj, ())

    def all_families(self) -> List[Presieve]:
        return [p for obj in self.category.objects for p in self.at(obj)]

    def count(self) -> int:
        return sum(len(self.at(obj)) for obj in self.category.objects)

    def generating_families(self) -> List[Presieve]:
        source = self.generators if self.generators is not None else self.families
        return [p for obj in self.category.objects for p in source.get(obj, ())]


def validate_presieve(cat: FinCategory, presieve: Presieve) -> Optional[str]:
    """Return a description of the first typing problem, if any"""
    if presieve.codomain not in cat.objects:
        return f"unknown object {presieve.codomain}"
    for f in presieve.sorted_arrows:
        if f not in cat.arrows:
            return f"unknown arrow {f}"
        if cat.cod(f) != presieve.codomain:
            return f"{f} does not end at {presieve.codomain}"
    return None


def sieve_closure(cat: FinCategory, p: Presieve) -> Sieve:
    """The smallest sieve containing p"""
    arrows: Set[str] = set()
    for f in p.arrows:
        for g in cat.arrows_into(cat.dom(f)):
            arrows.add(cat.compose(f, g))
    return Sieve(p.codomain, frozenset(arrows))


def maximal_sieve(cat: FinCategory, obj: str) -> Sieve:
    return Sieve(obj, frozenset(cat.arrows_into(obj)))


def all_sieves(cat: FinCategory, obj: str) -> List[Sieve]:
    """Every sieve on obj, built as unions of principal sieves"""
    sieves: Set[FrozenSet[str]] = {frozenset()}
    for f in cat.arrows_into(obj):
        principal = sieve_closure(cat, Presieve.of(obj, [f])).arrows
        sieves |= {s | principal for s in sieves}
    return [Sieve(obj, s) for s in sorted(sieves, key=lambda s: (len(s), sorted(s)))]


def covers(cat: FinCategory, B: CoverageBasis, s: Sieve) -> bool:
    """True iff s contains a presieve of B at its codomain"""
    return any(s.contains(p) for p in B.at(s.codomain))


def multicompose(cat: FinCategory, outer: Presieve, inners: Mapping[str, Presieve]) -> Presieve:
    """The family {f ∘ g : f in outer, g in inners[f]}"""
    arrows: Set[str] = set()
    for f in outer.sorted_arrows:
        inner = inners.get(f)
        if inner is None or inner.codomain != cat.dom(f):
            raise PreconditionError(
                "multicomposition-domain", f"no inner family on the domain {cat.dom(f)} of {f}")
        arrows.update(cat.compose(f, g) for g in inner.arrows)
    return Presieve.of(outer.codomain, arrows)


def factors_through(cat: FinCategory, h: str, R: Presieve) -> bool:
    """True iff h = f∘k for some f in R"""
    return any(cat.factor(h, f) for f in R.sorted_arrows)


def identity_family(cat: FinCategory, obj: str) -> Presieve:
    return Presieve.of(obj, [cat.identity(obj)])


def trivial_basis(cat: FinCategory, name: str = "trivial") -> CoverageBasis:
    return CoverageBasis.build(cat, {obj: [identity_family(cat, obj)] for obj in cat.objects}, name)


@dataclass(frozen=True)
class BasisViolation:
    """One violated instance of a basis condition"""
    condition: str
    family: Presieve
    witness: Tuple[str, ...]

    def describe(self) -> str:
        return f"({self.condition}) {self.family}: {', '.join(self.witness)}"


@dataclass
class BasisReport:
    """Violations of conditions (a), (b) and (c) found by check_basis"""
    basis: str
    violations: List[BasisViolation] = field(default_factory=list)
    instances_checked: int = 0

    @property
    def valid(self) -> bool:
        return not self.violations

    def by_condition(self, condition: str) -> List[BasisViolation]:
        return [v for v in self.violations if v.condition == condition]


def _inner_choices(cat: FinCategory, outer: Presieve,
                   families: Mapping[str, Sequence[Presieve]]) -> Iterable[Dict[str, Presieve]]:
    arrows = outer.sorted_arrows
    options = [families.get(cat.dom(f), ()) for f in arrows]
    for choice in itertools.product(*options):
        yield dict(zip(arrows, choice))


def check_basis(cat: FinCategory, B: CoverageBasis) -> BasisReport:
    """Exhaustively check identity membership, refinement along arrows and multicomposition"""
    report = BasisReport(B.name or "basis")
    members = {obj: {p.arrows for p in B.at(obj)} for obj in cat.objects}

    for obj in cat.objects:
        for presieve in B.at(obj):
            problem = validate_presieve(cat, presieve)
            if problem:
                raise PreconditionError("presieve-typing", f"{presieve}: {problem}")

    # Step 1: condition (a)
    for obj in cat.objects:
        report.instances_checked += 1
        if frozenset([cat.identity(obj)]) not in members[obj]:
            report.violations.append(
                BasisViolation("a", identity_family(cat, obj), (f"identity family missing at {obj}",)))

    # Step 2: condition (b), in factorization form
    for obj in cat.objects:
        for R in B.at(obj):
            for g in cat.arrows_into(obj):
                report.instances_checked += 1
                domain = cat.dom(g)
                if not any(all(factors_through(cat, cat.compose(g, t), R) for t in T.arrows)
                           for T in B.at(domain)):
                    report.violations.append(BasisViolation("b", R, (g, f"no refining family at {domain}")))

    # Step 3: condition (c)
    for obj in cat.objects:
        for R in B.at(obj):
            for inners in _inner_choices(cat, R, B.families):
                report.instances_checked += 1
                composite = multicompose(cat, R, inners)
                if composite.arrows not in members[obj]:
                    chosen = [f"{f}<-{inners[f]}" for f in R.sorted_arrows]
                    report.violations.append(BasisViolation("c", R, tuple(chosen)))
    logger.debug(f"check_basis {report.basis}: {report.instances_checked} instances, "
                 f"{len(report.violations)} violations")
    return report


def saturate_basis(cat: FinCategory, generators: Mapping[str, Iterable[Presieve]],
                   name: str = "") -> CoverageBasis:
    """Close generating families under identity families and multicomposition"""
    families: Dict[str, Set[Presieve]] = {obj: set(generators.get(obj, ())) for obj in cat.objects}
    for obj in cat.objects:
        families[obj].add(identity_family(cat, obj))
    total = sum(len(v) for v in families.values())
    changed = True
    while changed:
        changed = False
        snapshot = {obj: sorted(v, key=lambda p: p.key) for obj, v in families.items()}
        for obj in cat.objects:
            for R in snapshot[obj]:
                for inners in _inner_choices(cat, R, snapshot):
                    composite = multicompose(cat, R, inners)
                    if composite not in families[obj]:
                        families[obj].add(composite)
                        total += 1
                        changed = True
                        if total > MAX_BASIS_FAMILIES:
                            raise BasisClosureError(
                                f"saturating {name or 'basis'} exceeded {MAX_BASIS_FAMILIES} families")
    gens = {obj: list(generators.get(obj, ())) for obj in cat.objects}
    logger.debug(f"Saturated {name or 'basis'}: {total} families")
    return CoverageBasis.build(cat, families, name, gens)


@dataclass(frozen=True)
class TopologyDifference:
    """A sieve covering for exactly one of two bases"""
    sieve: Sieve
    first: bool
    second: bool


def compare_topologies(cat: FinCategory, B1: CoverageBasis, B2: CoverageBasis) -> List[TopologyDifference]:
    """Compare the generated topologies on every sieve of cat"""
    differences = []
    for obj in cat.objects:
        for s in all_sieves(cat, obj):
            first, second = covers(cat, B1, s), covers(cat, B2, s)
            if first != second:
                differences.append(TopologyDifference(s, first, second))
    return differences


def same_topology(cat: FinCategory, B1: CoverageBasis, B2: CoverageBasis) -> bool:
    return not compare_topologies(cat, B1, B2)


def bounded_subsets(arrows: Sequence[str]) -> Iterable[Tuple[str, ...]]:
    if len(arrows) > MAX_SUBSET_ARROWS:
        raise PreconditionError(
            "subset-bound", f"{len(arrows)} arrows exceed the subset enumeration bound {MAX_SUBSET_ARROWS}")
    for size in range(len(arrows) + 1):
        yield from itertools.combinations(arrows, size)


def frame_basis(cat: FinCategory, join: Callable[[Iterable[str]], str], name: str = "frame") -> CoverageBasis:
    """On a finite lattice viewed as a category: the basis generated by minimal join covers"""
    minimal: Dict[str, List[Presieve]] = {}
    for obj in cat.objects:
        found: List[FrozenSet[str]] = []
        for subset in bounded_subsets(cat.arrows_into(obj)):
            arrows = frozenset(subset)
            if any(kept <= arrows for kept in found):
                continue
            if join(cat.dom(f) for f in subset) == obj:
                found.append(arrows)
        minimal[obj] = [Presieve(obj, arrows) for arrows in found]
    return saturate_basis(cat, minimal, name)


def full_subcategory(cat: FinCategory, objects: Iterable[str], name: Optional[str] = None) -> FinCategory:
    keep = set(objects)
    arrows = {f: cat.arrows[f] for f in cat.arrow_ids if cat.dom(f) in keep and cat.cod(f) in keep}
    composition = {(g, f): h for (g, f), h in cat.composition.items() if g in arrows and f in arrows}
    identities = {x: cat.identity(x) for x in keep}
    return FinCategory(name or f"{cat.name}|sub", tuple(sorted(keep)), arrows, identities, composition)


@dataclass(frozen=True, eq=False)
class InducedBasis:
    """The basis induced on a full subcategory, with a finite density report"""
    basis: CoverageBasis
    inclusion: FinFunctor
    dense: bool
    undense_objects: Tuple[str, ...]


def induce_on_subcategory(cat: FinCategory, B: CoverageBasis, sub: FinCategory) -> InducedBasis:
    """Families on sub-objects whose sieve closure in cat is B-covering"""
    sub_objects = set(sub.objects)
    for f in sub.arrow_ids:
        if f not in cat.arrows:
            raise PreconditionError("full-subcategory", f"{f} is not an arrow of {cat.name}")
    families: Dict[str, List[Presieve]] = {}
    for obj in sub.objects:
        local = [f for f in cat.arrows_into(obj) if cat.dom(f) in sub_objects]
        families[obj] = [Presieve.of(obj, subset) for subset in bounded_subsets(local)
                         if covers(cat, B, sieve_closure(cat, Presieve.of(obj, subset)))]

    undense = []
    for obj in cat.objects:
        from_sub = Presieve.of(obj, [f for f in cat.arrows_into(obj) if cat.dom(f) in sub_objects])
        if not covers(cat, B, sieve_closure(cat, from_sub)):
            undense.append(obj)
    if undense:
        logger.warning(f"Inclusion of {sub.name} is not dense at {len(undense)} objects")
    inclusion = FinFunctor(sub, cat, {x: x for x in sub.objects}, {f: f for f in sub.arrows}, "inclusion")
    basis = CoverageBasis.build(sub, families, f"{B.name}|{sub.name}")
    return InducedBasis(basis, inclusion, not undense, tuple(sorted(undense)))
