"""Points of the over-site and homomorphisms into the model, in both directions"""
import itertools
import logging
import sys
from dataclasses import dataclass, field
from typing import Dict, Hashable, Iterator, List, Optional, Sequence, Tuple

from tqdm import tqdm

from overtopos_sites.config.config import SHOW_PROGRESS
from overtopos_sites.src.categories.constructions import element_id
from overtopos_sites.src.categories.enumeration import (
    FunctorSearch,
    SearchConstraint,
    deduplicate,
    find_natural_isomorphism,
)
from overtopos_sites.src.categories.fincat import FinFunctor, SetValuedFunctor, render, validate_functor
from overtopos_sites.src.errors import PointError, PreconditionError
from overtopos_sites.src.logic.fragment import FragmentSite, names, variables
from overtopos_sites.src.logic.semantics import (
    FinStructure,
    ModelHom,
    check_hom,
    check_model,
    eval_formula,
)
from overtopos_sites.src.logic.syntax import App, Eq, FormulaInContext, Rel, Var, conj, tuple_eq
from overtopos_sites.src.overtopos.sites import OverSite, antecedent_basis
from overtopos_sites.src.sheaves.cartesian import is_cartesian_functor
from overtopos_sites.src.topologies.coverage import Presieve, covers, sieve_closure

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class PointCandidate:
    """A set-valued functor on the elements category with its two flags"""
    functor: SetValuedFunctor
    cartesian: bool
    continuous: bool

    @property
    def is_point(self) -> bool:
        return self.cartesian and self.continuous


@dataclass(frozen=True, eq=False)
class HomIntoModel:
    """A structure N with a homomorphism g: N -> M"""
    structure: FinStructure
    hom: ModelHom


def family_surjective(G: SetValuedFunctor, R: Presieve, carriers=None, actions=None) -> bool:
    carriers = carriers if carriers is not None else G.carriers
    actions = actions if actions is not None else G.actions
    cat = G.source
    hit = {actions[f][x] for f in R.arrows for x in carriers[cat.dom(f)]}
    return all(y in hit for y in carriers[R.codomain])


def check_continuous(G: SetValuedFunctor, basis) -> bool:
    """True iff G sends every basis family to a jointly surjective family"""
    return all(family_surjective(G, R) for R in basis.all_families())


def _candidate(over: OverSite, G: SetValuedFunctor) -> PointCandidate:
    cartesian = is_cartesian_functor(G, over.limit_cones).valid
    return PointCandidate(G, cartesian, check_continuous(G, over.basis))


def hom_to_point(over: OverSite, N: FinStructure, g: ModelHom) -> PointCandidate:
    """The functor of fibers: φ@a ↦ the tuples of [[φ]] in N that g sends to a"""
    frag = over.fragment
    M = frag.model
    if not check_hom(N, M, g).valid:
        raise PreconditionError("hom", f"{g.name or 'g'} is not a homomorphism {N.name} -> {M.name}")
    theory_report = check_model(N, frag.fragment_theory)
    if not theory_report.valid:
        raise PreconditionError("fragment-theory", f"{N.name} violates {theory_report.violations[0].describe()}")
    F_N = frag.interpret(N)
    el = over.element_data
    cat = over.elements

    carriers: Dict[str, List[Tuple]] = {x: [] for x in cat.objects}
    for phi in frag.category.objects:
        sorts = frag.formulas[phi].sorts
        for n in F_N.carrier(phi):
            carriers[el.object_of(phi, g.apply(sorts, n))].append(n)
    actions = {}
    for arrow in cat.arrow_ids:
        theta = el.projection.arr(arrow)
        actions[arrow] = {n: F_N.act(theta, n) for n in carriers[cat.dom(arrow)]}
    G = SetValuedFunctor.build(cat, carriers, actions, f"P_{N.name}")
    candidate = _candidate(over, G)
    if not candidate.is_point:
        raise PointError(f"fiber functor of {N.name} has cartesian={candidate.cartesian}, "
                         f"continuous={candidate.continuous}")
    return candidate


def _require_formula(phi: Optional[str], what: str) -> str:
    if phi is None:
        raise PreconditionError("carrier-formulas", f"the fragment has no formula for {what}")
    return phi


def _require_arrow(frag: FragmentSite, dom: str, cod: str, theta: FormulaInContext, what: str) -> str:
    arrow = frag.arrow_for(dom, cod, theta)
    if arrow is None:
        raise PreconditionError("carrier-formulas", f"the fragment has no arrow for {what}")
    return arrow


def point_to_hom(over: OverSite, point: PointCandidate) -> HomIntoModel:
    """Glue the fibers of a point into a structure over M"""
    if not point.is_point:
        raise PreconditionError("point-flags", "the candidate is not cartesian and continuous")
    frag = over.fragment
    M = frag.model
    sig = M.signature
    G = point.functor
    el = over.element_data

    # Step 1: carriers from the fibers over the sort formulas
    sort_formulas = {s: _require_formula(frag.sort_formula(s), f"sort {s}") for s in sig.sorts}
    carriers = {s: [(m, x) for m in M.carrier(s) for x in G.carrier(el.object_of(sort_formulas[s], (m,)))]
                for s in sig.sorts}

    def product_data(sorts: Tuple[str, ...]):
        """The product formula over sorts and its projection arrows"""
        product = _require_formula(frag.product_formula(sorts), f"the product {render(sorts)}")
        xs = variables("x", sorts)
        projections = []
        for k, s in enumerate(sorts):
            theta = FormulaInContext(xs + (("y", s),), Eq(Var("y"), Var(xs[k][0])))
            projections.append(_require_arrow(frag, product, sort_formulas[s], theta, f"projection {k} of {product}"))
        return product, xs, projections

    def split(product: str, projections: Sequence[str], sorts: Tuple[str, ...],
              ms: Tuple) -> Dict[Tuple, Hashable]:
        """Map each element of the fiber at the product to its tuple of components"""
        obj = el.object_of(product, ms)
        table = {}
        for w in G.carrier(obj):
            components = tuple((ms[k], G.act(element_id(p, ms), w)) for k, p in enumerate(projections))
            table[components] = w
        expected = list(itertools.product(*[[(ms[k], x) for x in G.carrier(el.object_of(sort_formulas[s], (ms[k],)))]
                                            for k, s in enumerate(sorts)]))
        if len(table) != len(G.carrier(obj)) or set(table) != set(expected):
            raise PointError(f"the fiber at {obj} is not the product of its component fibers")
        return table

    # Step 2: function tables through the product and graph arrows
    functions: Dict[str, Dict[Tuple, Tuple]] = {}
    for f, (args, result) in sorted(sig.functions.items()):
        product, xs, projections = product_data(args)
        theta = FormulaInContext(xs + (("y", result),), Eq(Var("y"), App(f, tuple(Var(v) for v, _ in xs))))
        graph = _require_arrow(frag, product, sort_formulas[result], theta, f"the graph of {f}")
        table = {}
        for ms in M.product(args):
            image = M.functions[f][ms]
            for components, w in split(product, projections, args, ms).items():
                table[components] = (image, G.act(element_id(graph, ms), w))
        functions[f] = table

    # Step 3: relations through the relation formula and its inclusion into the product
    relations: Dict[str, set] = {}
    for r, args in sorted(sig.relations.items()):
        product, xs, projections = product_data(args)
        body = Rel(r, tuple(Var(v) for v, _ in xs))
        rho = _require_formula(frag.formula_by_key(FormulaInContext(xs, body)), f"relation {r}")
        ys = variables("y", args)
        theta = FormulaInContext(xs + ys, conj(tuple_eq(names(ys), names(xs)), body))
        inclusion = _require_arrow(frag, rho, product, theta, f"the inclusion of {r}")
        tuples = set()
        for ms in M.relations.get(r, ()):
            inverse = {w: components for components, w in split(product, projections, args, ms).items()}
            for v in G.carrier(el.object_of(rho, ms)):
                tuples.add(inverse[G.act(element_id(inclusion, ms), v)])
        relations[r] = tuples

    N = FinStructure.build(sig, carriers, functions, relations, f"N_{G.name or 'point'}")
    g = ModelHom(N, M, {s: {n: n[0] for n in N.carrier(s)} for s in sig.sorts}, "fiber-index")

    # Step 4: re-check the result
    if not check_hom(N, M, g).valid:
        raise PointError("the glued projection is not a homomorphism")
    theory_report = check_model(N, frag.fragment_theory)
    if not theory_report.valid:
        raise PointError(f"the glued structure violates {theory_report.violations[0].describe()}")
    return HomIntoModel(N, g)


def continuity_constraints(over: OverSite) -> List[SearchConstraint]:
    """One search constraint per generating family of the basis"""
    cat = over.elements
    constraints = []
    for R in over.basis.generating_families():
        objects = frozenset({R.codomain} | {cat.dom(f) for f in R.arrows})

        def check(carriers, actions, R=R):
            hit = {actions[f][x] for f in R.arrows for x in carriers[cat.dom(f)]}
            return all(y in hit for y in carriers[R.codomain])

        constraints.append(SearchConstraint(f"continuous {R}", objects, check))
    return constraints


def enumerate_points(over: OverSite, k: int) -> List[PointCandidate]:
    """Cartesian continuous functors with carriers of size at most k, up to isomorphism"""
    if k < 0:
        raise ValueError("carrier bound must be non-negative")
    if not over.cones:
        raise PreconditionError("designated-cones", f"{over.name} carries no designated limit cones")
    search = FunctorSearch(over.elements, k, over.cones, continuity_constraints(over))
    functors = deduplicate(search.run(), f"points of {over.name}")
    candidates = [_candidate(over, G) for G in functors]
    points = [P for P in candidates if P.is_point]
    if len(points) < len(candidates):
        logger.debug(f"{len(candidates) - len(points)} functors keep the designated cones but miss another limit")
    logger.info(f"{len(points)} point classes of {over.name} with carriers <= {k}")
    return points


def points_isomorphic(P: PointCandidate, Q: PointCandidate) -> bool:
    return find_natural_isomorphism(P.functor, Q.functor) is not None


def _fibers(h: HomIntoModel, sort: str) -> Dict[Hashable, List[Hashable]]:
    groups: Dict[Hashable, List[Hashable]] = {}
    for n in h.structure.carrier(sort):
        groups.setdefault(h.hom.maps[sort][n], []).append(n)
    return groups


def _sort_bijections(h1: HomIntoModel, h2: HomIntoModel, sort: str) -> Iterator[Dict[Hashable, Hashable]]:
    """Bijections of carriers commuting with the maps into M"""
    fibers1, fibers2 = _fibers(h1, sort), _fibers(h2, sort)
    if {m: len(v) for m, v in fibers1.items()} != {m: len(v) for m, v in fibers2.items()}:
        return
    keys = sorted(fibers1, key=render)
    options = [list(itertools.permutations(fibers2[m])) for m in keys]
    for choice in itertools.product(*options):
        sigma = {}
        for m, image in zip(keys, choice):
            sigma.update(zip(fibers1[m], image))
        yield sigma


def homs_isomorphic(h1: HomIntoModel, h2: HomIntoModel) -> bool:
    """Search for an isomorphism of structures over M"""
    N1, N2 = h1.structure, h2.structure
    sig = N1.signature
    if N1.size_vector() != N2.size_vector():
        return False
    for sigmas in itertools.product(*[list(_sort_bijections(h1, h2, s)) for s in sig.sorts]):
        maps = dict(zip(sig.sorts, sigmas))
        iso = ModelHom(N1, N2, maps)
        if not check_hom(N1, N2, iso).valid:
            continue
        inverse = ModelHom(N2, N1, {s: {v: k for k, v in maps[s].items()} for s in sig.sorts})
        if check_hom(N2, N1, inverse).valid:
            return True
    return False


def _fiber_bounded(frag: FragmentSite, N: FinStructure, g: ModelHom, k: int) -> bool:
    for phi, fic in frag.formulas.items():
        counts: Dict[Tuple, int] = {}
        for n in eval_formula(N, fic):
            a = g.apply(fic.sorts, n)
            counts[a] = counts.get(a, 0) + 1
            if counts[a] > k:
                return False
    return True


def _candidate_homs(frag: FragmentSite, k: int) -> Iterator[HomIntoModel]:
    M = frag.model
    sig = M.signature
    cells = [(s, m) for s in sig.sorts for m in M.carrier(s)]
    for sizes in itertools.product(range(k + 1), repeat=len(cells)):
        carriers: Dict[str, List[Tuple]] = {s: [] for s in sig.sorts}
        for (s, m), size in zip(cells, sizes):
            carriers[s].extend((m, i) for i in range(size))

        fiber = {s: {} for s in sig.sorts}
        for s in sig.sorts:
            for n in carriers[s]:
                fiber[s].setdefault(n[0], []).append(n)

        function_options = []
        symbols = sorted(sig.functions)
        for f in symbols:
            args, result = sig.functions[f]
            points = list(itertools.product(*[carriers[s] for s in args]))
            choices = [fiber[result].get(M.functions[f][tuple(n[0] for n in p)], []) for p in points]
            function_options.append([dict(zip(points, values)) for values in itertools.product(*choices)])
        relation_options = []
        relation_symbols = sorted(sig.relations)
        for r in relation_symbols:
            allowed = [p for p in itertools.product(*[carriers[s] for s in sig.relations[r]])
                       if tuple(n[0] for n in p) in M.relations.get(r, ())]
            relation_options.append([frozenset(p for p, keep in zip(allowed, mask) if keep)
                                     for mask in itertools.product([False, True], repeat=len(allowed))])

        for tables in itertools.product(*function_options):
            for rels in itertools.product(*relation_options):
                N = FinStructure.build(sig, carriers, dict(zip(symbols, tables)),
                                 dict(zip(relation_symbols, rels)), f"N{render(sizes)}")
                g = ModelHom(N, M, {s: {n: n[0] for n in carriers[s]} for s in sig.sorts}, "g")
                yield HomIntoModel(N, g)


def enumerate_homs(frag: FragmentSite, k: int) -> List[HomIntoModel]:
    """Iso classes of homs N -> M with N a model of the fragment theory and every fiber of size at most k"""
    if k < 0:
        raise ValueError("fiber bound must be non-negative")
    classes: List[HomIntoModel] = []
    seen = 0
    for h in tqdm(_candidate_homs(frag, k), desc=f"homs into {frag.model.name}",
                  disable=not SHOW_PROGRESS, file=sys.stderr):
        seen += 1
        if not check_model(h.structure, frag.fragment_theory).valid:
            continue
        if not _fiber_bounded(frag, h.structure, h.hom, k):
            continue
        if not any(homs_isomorphic(h, rep) for rep in classes):
            classes.append(h)
    logger.info(f"{seen} candidate homs into {frag.model.name}, {len(classes)} classes with fibers <= {k}")
    return classes


@dataclass
class CorrespondenceReport:
    """Point and hom counts at one bound, with the round trips checked on every instance"""
    bound: int
    points: int
    homs: int
    failures: List[str] = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return self.points == self.homs and not self.failures


def check_correspondence(over: OverSite, k: int) -> CorrespondenceReport:
    """Compare both enumerations and run both round trips"""
    frag = over.fragment
    points = enumerate_points(over, k)
    homs = enumerate_homs(frag, k)
    report = CorrespondenceReport(k, len(points), len(homs))
    for index, P in enumerate(points):
        try:
            back = hom_to_point(over, *_unpack(point_to_hom(over, P)))
        except (PointError, PreconditionError) as e:
            report.failures.append(f"point {index}: {e}")
            continue
        if not points_isomorphic(P, back):
            report.failures.append(f"point {index}: round trip is not isomorphic")
    for index, h in enumerate(homs):
        try:
            back = point_to_hom(over, hom_to_point(over, h.structure, h.hom))
        except (PointError, PreconditionError) as e:
            report.failures.append(f"hom {index}: {e}")
            continue
        if not homs_isomorphic(h, back):
            report.failures.append(f"hom {index}: round trip is not isomorphic")
    return report


def _unpack(h: HomIntoModel) -> Tuple[FinStructure, ModelHom]:
    return h.structure, h.hom


@dataclass
class SiteMorphismReport:
    """The induced functor with the families whose covering fails in either direction"""
    functor: FinFunctor
    preservation_failures: List[Presieve] = field(default_factory=list)
    lifting_failures: List[Tuple[str, Presieve]] = field(default_factory=list)

    @property
    def comorphism_valid(self) -> bool:
        """Covers of images lift back along the functor"""
        return not self.lifting_failures

    @property
    def valid(self) -> bool:
        """Basis families go to covering sieves and covers of images lift back"""
        return self.comorphism_valid and not self.preservation_failures


def hom_to_site_morphism(frag: FragmentSite, M1: FinStructure, M2: FinStructure, f: ModelHom) -> SiteMorphismReport:
    """The functor φ@a ↦ φ@f(a) between element categories, with both cover conditions checked"""
    if not check_hom(M1, M2, f).valid:
        raise PreconditionError("hom", f"{f.name or 'f'} is not a homomorphism {M1.name} -> {M2.name}")
    over1 = antecedent_basis(frag if M1 is frag.model else frag.reinterpret(M1))
    over2 = antecedent_basis(frag if M2 is frag.model else frag.reinterpret(M2))
    el1, el2 = over1.element_data, over2.element_data
    cat1, cat2 = over1.elements, over2.elements

    def image(phi: str, a: Tuple) -> Tuple:
        return f.apply(frag.formulas[phi].sorts, a)

    on_objects = {x: el2.object_of(phi, image(phi, a)) for x, (phi, a) in el1.points.items()}
    on_arrows = {}
    for u in cat1.arrow_ids:
        theta = el1.projection.arr(u)
        phi, b = el1.points[cat1.dom(u)]
        on_arrows[u] = element_id(theta, image(phi, b))
    F = FinFunctor(cat1, cat2, on_objects, on_arrows, f"el({f.name or 'f'})")
    functor_report = validate_functor(F)
    if not functor_report.valid:
        raise PreconditionError("functor", functor_report.violations[0].describe())
    report = SiteMorphismReport(F)

    # Step 1: images of covering families
    for R in over1.basis.generating_families():
        image_family = Presieve.of(F.obj(R.codomain), [F.arr(u) for u in R.arrows])
        if not covers(cat2, over2.basis, sieve_closure(cat2, image_family)):
            report.preservation_failures.append(R)

    # Step 2: covers of images pulled back along F
    for x in cat1.objects:
        for S in over2.basis.generating_families():
            if S.codomain != F.obj(x):
                continue
            closure = sieve_closure(cat2, S).arrows
            pulled = Presieve.of(x, [u for u in cat1.arrows_into(x) if F.arr(u) in closure])
            if not covers(cat1, over1.basis, sieve_closure(cat1, pulled)):
                report.lifting_failures.append((x, S))
    if report.preservation_failures:
        logger.warning(f"{len(report.preservation_failures)} covering families are not sent to covers")
    return report
