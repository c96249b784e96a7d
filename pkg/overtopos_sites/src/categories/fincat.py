"""Finite categories, functors and set-valued functors as explicit tables"""
import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Dict, Hashable, Iterable, List, Mapping, Optional, Tuple, Union

from overtopos_sites.src.errors import PreconditionError

logger = logging.getLogger(__name__)


def render(value) -> str:
    """Canonical text form of an identifier, element or nested tuple of elements"""
    if isinstance(value, tuple):
        return "[" + ",".join(render(v) for v in value) + "]"
    return str(value)


def sort_key(value) -> str:
    return render(value)


@dataclass(frozen=True)
class Violation:
    """One violated law together with the identifiers witnessing it"""
    law: str
    witness: Tuple[str, ...]
    detail: str = ""

    def describe(self) -> str:
        text = f"{self.law} [{', '.join(self.witness)}]"
        return f"{text}: {self.detail}" if self.detail else text


@dataclass
class ValidationReport:
    """Violations found while validating a table-based structure"""
    subject: str
    violations: List[Violation] = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return not self.violations

    def add(self, law: str, *witness: str, detail: str = "") -> None:
        self.violations.append(Violation(law, tuple(witness), detail))

    def extend(self, other: "ValidationReport") -> None:
        self.violations.extend(other.violations)


@dataclass(frozen=True, eq=False)
class FinCategory:
    """A finite category given by its object, arrow and composition tables

    composition maps (g, f) to g∘f for every composable pair.
    """
    name: str
    objects: Tuple[str, ...]
    arrows: Mapping[str, Tuple[str, str]]
    identities: Mapping[str, str]
    composition: Mapping[Tuple[str, str], str]

    @classmethod
    def build(cls, name: str, objects: Iterable[str], arrows: Mapping[str, Tuple[str, str]],
              compose: Union[Mapping[Tuple[str, str], str], Iterable[Tuple[str, str, str]]] = (),
              identities: Optional[Mapping[str, str]] = None) -> "FinCategory":
        """Build a category from its non-identity data, completing identities"""
        objects = tuple(sorted(set(objects)))
        identities = dict(identities or {})
        for obj in objects:
            identities.setdefault(obj, f"id_{obj}")
        all_arrows = {ident: (obj, obj) for obj, ident in identities.items()}
        all_arrows.update({f: (d, c) for f, (d, c) in arrows.items()})

        if isinstance(compose, Mapping):
            table = dict(compose)
        else:
            table = {(g, f): h for g, f, h in compose}
        for f, (d, c) in all_arrows.items():
            table.setdefault((identities[c], f), f)
            table.setdefault((f, identities[d]), f)
        return cls(name, objects, all_arrows, identities, table)

    def dom(self, f: str) -> str:
        return self.arrows[f][0]

    def cod(self, f: str) -> str:
        return self.arrows[f][1]

    def identity(self, obj: str) -> str:
        return self.identities[obj]

    def is_identity(self, f: str) -> bool:
        return self.identities.get(self.dom(f)) == f

    def compose(self, *path: str) -> str:
        """Compose a right-to-left path: compose(h, g, f) = h∘g∘f"""
        if not path:
            raise PreconditionError("composable-path", "empty path")
        result = path[-1]
        for g in reversed(path[:-1]):
            try:
                result = self.composition[(g, result)]
            except KeyError:
                raise PreconditionError(
                    "composable-path", f"{g} and {result} are not composable in {self.name}")
        return result

    @cached_property
    def arrow_ids(self) -> Tuple[str, ...]:
        return tuple(sorted(self.arrows))

    @cached_property
    def _homs(self) -> Dict[Tuple[str, str], Tuple[str, ...]]:
        homs: Dict[Tuple[str, str], List[str]] = {}
        for f in self.arrow_ids:
            homs.setdefault(self.arrows[f], []).append(f)
        return {key: tuple(value) for key, value in homs.items()}

    @cached_property
    def _into(self) -> Dict[str, Tuple[str, ...]]:
        into: Dict[str, List[str]] = {obj: [] for obj in self.objects}
        for f in self.arrow_ids:
            into.setdefault(self.cod(f), []).append(f)
        return {key: tuple(value) for key, value in into.items()}

    @cached_property
    def _from(self) -> Dict[str, Tuple[str, ...]]:
        out: Dict[str, List[str]] = {obj: [] for obj in self.objects}
        for f in self.arrow_ids:
            out.setdefault(self.dom(f), []).append(f)
        return {key: tuple(value) for key, value in out.items()}

    def hom(self, x: str, y: str) -> Tuple[str, ...]:
        return self._homs.get((x, y), ())

    def arrows_into(self, y: str) -> Tuple[str, ...]:
        return self._into.get(y, ())

    def arrows_from(self, x: str) -> Tuple[str, ...]:
        return self._from.get(x, ())

    def inverse(self, f: str) -> Optional[str]:
        """Return the inverse of f, or None if f is not an isomorphism"""
        d, c = self.arrows[f]
        for g in self.hom(c, d):
            if self.compose(g, f) == self.identity(d) and self.compose(f, g) == self.identity(c):
                return g
        return None

    def factor(self, h: str, f: str) -> List[str]:
        """All k with f∘k = h"""
        if self.cod(h) != self.cod(f):
            return []
        return [k for k in self.hom(self.dom(h), self.dom(f)) if self.compose(f, k) == h]

    def __repr__(self) -> str:
        return f"FinCategory({self.name!r}, {len(self.objects)} objects, {len(self.arrows)} arrows)"


@dataclass(frozen=True, eq=False)
class FinFunctor:
    """A functor between finite categories given on objects and arrows"""
    source: FinCategory
    target: FinCategory
    on_objects: Mapping[str, str]
    on_arrows: Mapping[str, str]
    name: str = ""

    @classmethod
    def identity(cls, cat: FinCategory) -> "FinFunctor":
        return cls(cat, cat, {x: x for x in cat.objects}, {f: f for f in cat.arrows}, f"id_{cat.name}")

    def obj(self, x: str) -> str:
        return self.on_objects[x]

    def arr(self, f: str) -> str:
        return self.on_arrows[f]

    def then(self, other: "FinFunctor") -> "FinFunctor":
        """The composite other∘self"""
        return FinFunctor(
            self.source, other.target,
            {x: other.obj(y) for x, y in self.on_objects.items()},
            {f: other.arr(g) for f, g in self.on_arrows.items()},
            f"{other.name}.{self.name}")


@dataclass(frozen=True, eq=False)
class SetValuedFunctor:
    """A functor from a finite category into finite sets"""
    source: FinCategory
    carriers: Mapping[str, Tuple[Hashable, ...]]
    actions: Mapping[str, Mapping[Hashable, Hashable]]
    name: str = ""

    @classmethod
    def build(cls, source: FinCategory, carriers: Mapping[str, Iterable[Hashable]],
              actions: Mapping[str, Mapping[Hashable, Hashable]], name: str = "") -> "SetValuedFunctor":
        """Sort carriers canonically and fill in identity actions"""
        sorted_carriers = {obj: tuple(sorted(set(carriers.get(obj, ())), key=sort_key))
                           for obj in source.objects}
        tables = {f: dict(table) for f, table in actions.items()}
        for obj, ident in source.identities.items():
            tables.setdefault(ident, {x: x for x in sorted_carriers[obj]})
        return cls(source, sorted_carriers, tables, name)

    def carrier(self, obj: str) -> Tuple[Hashable, ...]:
        return self.carriers.get(obj, ())

    def act(self, f: str, x: Hashable) -> Hashable:
        return self.actions[f][x]

    def image(self, f: str) -> frozenset:
        return frozenset(self.actions[f].values())

    def size_vector(self) -> Tuple[int, ...]:
        return tuple(len(self.carrier(obj)) for obj in self.source.objects)

    def fingerprint(self) -> str:
        """Canonical text of all tables, used for ordering"""
        parts = []
        for obj in self.source.objects:
            parts.append(f"{obj}:{render(self.carrier(obj))}")
        for f in self.source.arrow_ids:
            table = self.actions.get(f, {})
            parts.append(f + ":" + ",".join(f"{render(x)}>{render(table[x])}"
                                             for x in sorted(table, key=sort_key)))
        return "|".join(parts)


def validate_category(cat: FinCategory) -> ValidationReport:
    """Check typing, identity and associativity laws of a category table"""
    report = ValidationReport(cat.name)
    objects = set(cat.objects)

    # Step 1: typing of arrows and identities
    for f in cat.arrow_ids:
        d, c = cat.arrows[f]
        if d not in objects or c not in objects:
            report.add("arrow-typing", f, detail=f"{d} -> {c} uses an unknown object")
    for obj in cat.objects:
        ident = cat.identities.get(obj)
        if ident is None:
            report.add("identity-missing", obj)
        elif cat.arrows.get(ident) != (obj, obj):
            report.add("identity-typing", obj, ident)
    if not report.valid:
        return report

    # Step 2: composition is defined exactly on composable pairs and well typed
    for (g, f), h in sorted(cat.composition.items()):
        if g not in cat.arrows or f not in cat.arrows:
            report.add("composition-domain", g, f, detail="unknown arrow")
            continue
        if cat.cod(f) != cat.dom(g):
            report.add("composition-domain", g, f, detail="pair is not composable")
            continue
        if h not in cat.arrows:
            report.add("composition-typing", g, f, h, detail="result is not an arrow")
        elif cat.arrows[h] != (cat.dom(f), cat.cod(g)):
            report.add("composition-typing", g, f, h,
                       detail=f"result has type {cat.dom(h)} -> {cat.cod(h)}, "
                              f"expected {cat.dom(f)} -> {cat.cod(g)}")
    for f in cat.arrow_ids:
        for g in cat.arrows_from(cat.cod(f)):
            if (g, f) not in cat.composition:
                report.add("composition-total", g, f)
    if not report.valid:
        return report

    # Step 3: identity laws
    for f in cat.arrow_ids:
        d, c = cat.arrows[f]
        if cat.composition[(cat.identity(c), f)] != f:
            report.add("left-identity", cat.identity(c), f)
        if cat.composition[(f, cat.identity(d))] != f:
            report.add("right-identity", f, cat.identity(d))

    # Step 4: associativity over all composable triples
    for f in cat.arrow_ids:
        for g in cat.arrows_from(cat.cod(f)):
            gf = cat.composition[(g, f)]
            for h in cat.arrows_from(cat.cod(g)):
                left = cat.composition[(h, gf)]
                right = cat.composition[(cat.composition[(h, g)], f)]
                if left != right:
                    report.add("associativity", h, g, f, detail=f"{left} != {right}")
    return report


def validate_functor(functor: Union[FinFunctor, SetValuedFunctor]) -> ValidationReport:
    """Check that a functor is total, well typed and preserves identities and composites"""
    if isinstance(functor, SetValuedFunctor):
        return _validate_set_valued(functor)
    report = ValidationReport(functor.name or "functor")
    src, tgt = functor.source, functor.target
    for x in src.objects:
        if functor.on_objects.get(x) not in tgt.objects:
            report.add("object-map", x)
    for f in src.arrow_ids:
        image = functor.on_arrows.get(f)
        if image not in tgt.arrows:
            report.add("arrow-map", f)
            continue
        d, c = src.arrows[f]
        if tgt.arrows[image] != (functor.on_objects.get(d), functor.on_objects.get(c)):
            report.add("arrow-typing", f, image)
    if not report.valid:
        return report
    for obj, ident in src.identities.items():
        if functor.arr(ident) != tgt.identity(functor.obj(obj)):
            report.add("preserves-identity", ident)
    for (g, f), h in sorted(src.composition.items()):
        if tgt.composition[(functor.arr(g), functor.arr(f))] != functor.arr(h):
            report.add("preserves-composition", g, f)
    return report


def _validate_set_valued(functor: SetValuedFunctor) -> ValidationReport:
    report = ValidationReport(functor.name or "set-valued functor")
    src = functor.source
    for f in src.arrow_ids:
        d, c = src.arrows[f]
        table = functor.actions.get(f)
        if table is None:
            report.add("action-missing", f)
            continue
        codomain = set(functor.carrier(c))
        for x in functor.carrier(d):
            if x not in table:
                report.add("action-total", f, render(x))
            elif table[x] not in codomain:
                report.add("action-typing", f, render(x), detail=f"{render(table[x])} not in carrier of {c}")
    if not report.valid:
        return report
    for obj, ident in src.identities.items():
        if any(functor.act(ident, x) != x for x in functor.carrier(obj)):
            report.add("preserves-identity", ident)
    for (g, f), h in sorted(src.composition.items()):
        for x in functor.carrier(src.dom(f)):
            if functor.act(g, functor.act(f, x)) != functor.act(h, x):
                report.add("preserves-composition", g, f, render(x))
                break
    return report


def opposite(cat: FinCategory) -> FinCategory:
    """The opposite category; arrow identifiers are shared with cat"""
    return FinCategory(
        f"{cat.name}^op",
        cat.objects,
        {f: (c, d) for f, (d, c) in cat.arrows.items()},
        dict(cat.identities),
        {(f, g): h for (g, f), h in cat.composition.items()})


def terminal_category(name: str = "1") -> FinCategory:
    return FinCategory.build(name, ["*"], {})


def empty_category(name: str = "0") -> FinCategory:
    return FinCategory.build(name, [], {})


def discrete_category(name: str, objects: Iterable[str]) -> FinCategory:
    return FinCategory.build(name, objects, {})


def poset_category(name: str, elements: Iterable[str], leq: Callable[[str, str], bool]) -> FinCategory:
    """The category of a finite preorder; the arrow x -> y is named 'x<=y'"""
    elements = sorted(set(elements))
    arrows = {f"{x}<={y}": (x, y) for x in elements for y in elements if x != y and leq(x, y)}
    identities = {x: f"{x}<={x}" for x in elements}
    compose = {}
    for x in elements:
        for y in elements:
            if not leq(x, y):
                continue
            for z in elements:
                if leq(y, z):
                    compose[(f"{y}<={z}", f"{x}<={y}")] = f"{x}<={z}"
    return FinCategory.build(name, elements, arrows, compose, identities)
