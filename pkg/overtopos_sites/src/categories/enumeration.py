"""Bounded enumeration of set-valued functors up to natural isomorphism"""
import itertools
import logging
import sys
from dataclasses import dataclass
from typing import Callable, Dict, FrozenSet, Hashable, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple

from tqdm import tqdm

from overtopos_sites.config.config import SHOW_PROGRESS
from overtopos_sites.src.categories.constructions import LimitCone
from overtopos_sites.src.categories.fincat import FinCategory, FinFunctor, SetValuedFunctor

logger = logging.getLogger(__name__)

Carriers = Dict[str, Tuple[Hashable, ...]]
Actions = Dict[str, Dict[Hashable, Hashable]]


@dataclass(frozen=True)
class SearchConstraint:
    """A predicate checked as soon as all of its objects have been placed"""
    name: str
    objects: FrozenSet[str]
    check: Callable[[Mapping[str, Tuple], Mapping[str, Mapping]], bool]


def set_limit(diagram: FinFunctor, carriers: Mapping[str, Sequence[Hashable]],
              actions: Mapping[str, Mapping[Hashable, Hashable]]) -> List[Tuple[Hashable, ...]]:
    """Compatible families over the diagram, one entry per shape object in shape order"""
    shape = diagram.source
    order = list(shape.objects)
    position = {obj: i for i, obj in enumerate(order)}
    checks = [(diagram.arr(d), position[shape.dom(d)], position[shape.cod(d)])
              for d in shape.arrow_ids if not shape.is_identity(d)]
    results: List[Tuple[Hashable, ...]] = []

    def extend(partial: List[Hashable]) -> None:
        i = len(partial)
        if i == len(order):
            results.append(tuple(partial))
            return
        for x in carriers[diagram.obj(order[i])]:
            partial.append(x)
            if all(actions[f][partial[s]] == partial[t]
                   for f, s, t in checks if s <= i and t <= i):
                extend(partial)
            partial.pop()

    extend([])
    return results


def preserves_limit_cone(cone: LimitCone, carriers: Mapping[str, Sequence[Hashable]],
                         actions: Mapping[str, Mapping[Hashable, Hashable]]) -> bool:
    """True iff the legs of cone induce a bijection onto the set-theoretic limit"""
    shape = cone.diagram.source
    legs = [cone.leg(i) for i in shape.objects]
    induced = [tuple(actions[leg][x] for leg in legs) for x in carriers[cone.apex]]
    target = set_limit(cone.diagram, carriers, actions)
    return len(set(induced)) == len(induced) and set(induced) == set(target)


class FunctorSearch:
    """Backtracking search for set-valued functors with bounded carriers

    Apexes of designated cones receive the set-theoretic limit as carrier and
    projections as legs, which removes relabelled duplicates from the search.
    """

    def __init__(self, cat: FinCategory, bound: int, cones: Iterable[LimitCone] = (),
                 constraints: Iterable[SearchConstraint] = ()):
        self.cat = cat
        self.bound = bound
        self.cones = list(cones)
        self.constraints = list(constraints)
        self.deriving: Dict[str, LimitCone] = {}
        for cone in self.cones:
            diagram_objects = {cone.diagram.obj(i) for i in cone.diagram.source.objects}
            if cone.apex not in self.deriving and cone.apex not in diagram_objects:
                self.deriving[cone.apex] = cone
        self._plan()

    def _plan(self) -> None:
        """Order objects so that derived apexes follow their diagrams"""
        cat = self.cat
        placed: List[str] = []
        remaining = list(cat.objects)
        derived = dict(self.deriving)
        while remaining:
            ready = [x for x in remaining if x in derived and
                     all(derived[x].diagram.obj(i) in placed for i in derived[x].diagram.source.objects)]
            if ready:
                chosen = ready[0]
            else:
                free = [x for x in remaining if x not in derived]
                if free:
                    chosen = free[0]
                else:
                    # cyclic dependencies between apexes: enumerate the first one freely
                    chosen = remaining[0]
                    del derived[chosen]
            placed.append(chosen)
            remaining.remove(chosen)
        self.deriving = derived
        self.order = placed
        position = {x: i for i, x in enumerate(placed)}

        self.pending: Dict[str, List[str]] = {}
        for x in placed:
            self.pending[x] = [f for f in cat.arrow_ids
                               if not cat.is_identity(f)
                               and max(position[cat.dom(f)], position[cat.cod(f)]) == position[x]]

        self.fixed_legs: Dict[str, List[int]] = {}
        for cone in self.deriving.values():
            for pos, i in enumerate(cone.diagram.source.objects):
                self.fixed_legs.setdefault(cone.leg(i), []).append(pos)

        self.decompositions: Dict[str, List[Tuple[str, str]]] = {f: [] for f in cat.arrows}
        self.triples: Dict[str, List[Tuple[str, str, str]]] = {f: [] for f in cat.arrows}
        for (g, f), h in cat.composition.items():
            if cat.is_identity(g) or cat.is_identity(f):
                continue
            self.decompositions[h].append((g, f))
            for a in {g, f, h}:
                self.triples[a].append((g, f, h))

        self.cone_checks: Dict[str, List[LimitCone]] = {x: [] for x in placed}
        for cone in self.cones:
            if self.deriving.get(cone.apex) is cone:
                continue
            involved = {cone.apex} | {cone.diagram.obj(i) for i in cone.diagram.source.objects}
            last = max(involved, key=lambda x: position[x])
            self.cone_checks[last].append(cone)
        self.constraint_checks: Dict[str, List[SearchConstraint]] = {x: [] for x in placed}
        self.initial_constraints = []
        for constraint in self.constraints:
            if not constraint.objects:
                self.initial_constraints.append(constraint)
                continue
            last = max(constraint.objects, key=lambda x: position[x])
            self.constraint_checks[last].append(constraint)
        logger.debug(f"Functor search on {cat.name}: order {self.order}, "
                     f"{len(self.deriving)} derived apexes")

    def run(self) -> Iterator[SetValuedFunctor]:
        """Yield every functor satisfying the designated cones and constraints"""
        if not all(c.check({}, {}) for c in self.initial_constraints):
            return
        yield from self._place(0, {}, {})

    def _place(self, step: int, carriers: Carriers, actions: Actions) -> Iterator[SetValuedFunctor]:
        if step == len(self.order):
            yield SetValuedFunctor.build(self.cat, carriers, actions)
            return
        obj = self.order[step]
        ident = self.cat.identity(obj)
        for carrier in self._carrier_options(obj, carriers, actions):
            carriers[obj] = carrier
            actions[ident] = {x: x for x in carrier}
            for _ in self._assign(list(self.pending[obj]), carriers, actions):
                if all(preserves_limit_cone(cone, carriers, actions) for cone in self.cone_checks[obj]) and \
                        all(c.check(carriers, actions) for c in self.constraint_checks[obj]):
                    yield from self._place(step + 1, carriers, actions)
            del actions[ident]
            del carriers[obj]

    def _carrier_options(self, obj: str, carriers: Carriers, actions: Actions) -> List[Tuple[Hashable, ...]]:
        cone = self.deriving.get(obj)
        if cone is None:
            return [tuple(range(n)) for n in range(self.bound + 1)]
        limit = set_limit(cone.diagram, carriers, actions)
        return [tuple(limit)] if len(limit) <= self.bound else []

    def _assign(self, pending: List[str], carriers: Carriers, actions: Actions) -> Iterator[None]:
        if not pending:
            yield
            return
        chosen, options = 0, None
        for index, arrow in enumerate(pending):
            determined, table = self._determined(arrow, carriers, actions)
            if determined:
                chosen, options = index, ([table] if table is not None else [])
                break
        arrow = pending[chosen]
        if options is None:
            options = self._all_tables(arrow, carriers)
        rest = pending[:chosen] + pending[chosen + 1:]
        for table in options:
            actions[arrow] = table
            if self._consistent(arrow, actions):
                yield from self._assign(rest, carriers, actions)
            del actions[arrow]

    def _determined(self, arrow: str, carriers: Carriers,
                    actions: Actions) -> Tuple[bool, Optional[Dict[Hashable, Hashable]]]:
        cat = self.cat
        d, c = cat.arrows[arrow]
        source = carriers[d]
        if arrow in self.fixed_legs:
            positions = self.fixed_legs[arrow]
            if any(len({x[p] for p in positions}) > 1 for x in source):
                return True, None
            return True, {x: x[positions[0]] for x in source}
        cone = self.deriving.get(c)
        if cone is not None:
            components = [cat.compose(cone.leg(i), arrow) for i in cone.diagram.source.objects]
            if all(f in actions for f in components):
                target = set(carriers[c])
                table = {x: tuple(actions[f][x] for f in components) for x in source}
                if all(v in target for v in table.values()):
                    return True, table
                return True, None
        for g, f in self.decompositions[arrow]:
            if g in actions and f in actions and g != arrow and f != arrow:
                return True, {x: actions[g][actions[f][x]] for x in source}
        return False, None

    def _all_tables(self, arrow: str, carriers: Carriers) -> Iterator[Dict[Hashable, Hashable]]:
        d, c = self.cat.arrows[arrow]
        source, target = carriers[d], carriers[c]
        for values in itertools.product(target, repeat=len(source)):
            yield dict(zip(source, values))

    def _consistent(self, arrow: str, actions: Actions) -> bool:
        for g, f, h in self.triples[arrow]:
            if g in actions and f in actions and h in actions:
                tg, tf, th = actions[g], actions[f], actions[h]
                if any(tg[y] != th[x] for x, y in tf.items()):
                    return False
        return True


def find_natural_isomorphism(F: SetValuedFunctor, G: SetValuedFunctor) -> Optional[Dict[str, Dict]]:
    """Exhaustive search for a natural isomorphism F => G"""
    cat = F.source
    if F.size_vector() != G.size_vector():
        return None
    order = sorted(cat.objects, key=lambda x: (len(F.carrier(x)), x))
    position = {x: i for i, x in enumerate(order)}
    checks: Dict[str, List[str]] = {x: [] for x in order}
    for f in cat.arrow_ids:
        if cat.is_identity(f):
            continue
        last = max(cat.dom(f), cat.cod(f), key=lambda x: position[x])
        checks[last].append(f)

    def extend(step: int, iso: Dict[str, Dict]) -> Optional[Dict[str, Dict]]:
        if step == len(order):
            return {x: dict(m) for x, m in iso.items()}
        obj = order[step]
        source = F.carrier(obj)
        for image in itertools.permutations(G.carrier(obj)):
            iso[obj] = dict(zip(source, image))
            if all(iso[cat.cod(f)][F.act(f, x)] == G.act(f, iso[cat.dom(f)][x])
                   for f in checks[obj] for x in F.carrier(cat.dom(f))):
                found = extend(step + 1, iso)
                if found is not None:
                    return found
            del iso[obj]
        return None

    return extend(0, {})


def _invariant(F: SetValuedFunctor) -> Tuple:
    return F.size_vector(), tuple(len(F.image(f)) for f in F.source.arrow_ids)


def deduplicate(functors: Iterable[SetValuedFunctor], label: str = "functors") -> List[SetValuedFunctor]:
    """Keep one functor per isomorphism class, in canonical order"""
    buckets: Dict[Tuple, List[SetValuedFunctor]] = {}
    seen = 0
    for functor in tqdm(functors, desc=label, disable=not SHOW_PROGRESS, file=sys.stderr):
        seen += 1
        bucket = buckets.setdefault(_invariant(functor), [])
        if not any(find_natural_isomorphism(functor, rep) is not None for rep in bucket):
            bucket.append(functor)
    representatives = [rep for bucket in buckets.values() for rep in bucket]
    representatives.sort(key=lambda rep: (rep.size_vector(), rep.fingerprint()))
    logger.info(f"Enumerated {seen} {label}, {len(representatives)} isomorphism classes")
    return representatives


def enumerate_set_valued_functors(cat: FinCategory, k: int, cones: Iterable[LimitCone] = (),
                                  constraints: Iterable[SearchConstraint] = ()) -> List[SetValuedFunctor]:
    """All functors cat -> FinSet with carriers of size at most k, up to isomorphism"""
    if k < 0:
        raise ValueError("carrier bound must be non-negative")
    search = FunctorSearch(cat, k, cones, constraints)
    return deduplicate(search.run(), f"functors on {cat.name}")
