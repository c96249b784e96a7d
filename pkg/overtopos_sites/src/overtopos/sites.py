"""The category of elements of a model with its antecedent basis, set-based and over a site"""
import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Dict, Hashable, List, Mapping, Optional, Set, Tuple

from overtopos_sites.src.categories.constructions import (
    ConeWitness,
    ElementsCategory,
    LimitCone,
    category_of_elements,
    cospan_diagram,
    element_id,
    empty_diagram,
    is_limit,
)
from overtopos_sites.src.categories.fincat import FinCategory, FinFunctor, ValidationReport, render
from overtopos_sites.src.errors import PreconditionError
from overtopos_sites.src.fibrations.grothendieck import (
    GrothendieckTotal,
    IndexedCategory,
    grothendieck_construction,
    total_arrow_id,
)
from overtopos_sites.src.logic.fragment import FragmentSite, names, variables
from overtopos_sites.src.logic.semantics import FinStructure, ModelHom, check_hom, check_model, eval_formula
from overtopos_sites.src.logic.syntax import FormulaInContext, conj, tuple_eq
from overtopos_sites.src.sheaves.cartesian import finite_limit_cones
from overtopos_sites.src.sheaves.presheaves import FinPresheaf, is_sheaf, jointly_locally_surjective, locally_in_image
from overtopos_sites.src.topologies.coverage import (
    CoverageBasis,
    Presieve,
    bounded_subsets,
    same_topology,
    saturate_basis,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class OverSite:
    """The elements category of a model (or model over a site) with its antecedent basis"""
    name: str
    elements: FinCategory
    basis: CoverageBasis
    fragment: FragmentSite
    fragment_projection: FinFunctor
    cones: Tuple[LimitCone, ...] = ()
    base_projection: Optional[FinFunctor] = None
    element_data: Optional[ElementsCategory] = None
    total: Optional[GrothendieckTotal] = None
    notes: Tuple[str, ...] = ()

    def element(self, obj: str) -> Tuple[str, Hashable]:
        """The (formula, tuple) pair of a set-based element object"""
        if self.element_data is None:
            raise PreconditionError("set-based", f"{self.name} is not built from a single model")
        return self.element_data.points[obj]

    @cached_property
    def limit_cones(self) -> Tuple[LimitCone, ...]:
        """The terminal cone and a limit cone over every cospan of the elements category that has one"""
        return tuple(finite_limit_cones(self.elements))


def lift_designated_cones(frag: FragmentSite, el: ElementsCategory) -> List[LimitCone]:
    """The terminal cone and one cone per designated square and compatible pair of elements"""
    cat = el.category
    interp = frag.interp
    one = el.object_of(frag.terminal, ())
    cones = [LimitCone(empty_diagram(cat), ConeWitness(one, ()))]
    for square in frag.squares:
        A, B = frag.category.dom(square.f), frag.category.dom(square.g)
        apex_of = {(interp.act(square.p1, u), interp.act(square.p2, u)): u for u in interp.carrier(square.apex)}
        for a in interp.carrier(A):
            for b in interp.carrier(B):
                if interp.act(square.f, a) != interp.act(square.g, b):
                    continue
                u = apex_of[(a, b)]
                f, g = element_id(square.f, a), element_id(square.g, b)
                p1, p2 = element_id(square.p1, u), element_id(square.p2, u)
                legs = (("0", p1), ("1", p2), ("2", cat.compose(f, p1)))
                cones.append(LimitCone(cospan_diagram(cat, f, g), ConeWitness(el.object_of(square.apex, u), legs)))
    return cones


def antecedent_basis(frag: FragmentSite, name: Optional[str] = None) -> OverSite:
    """One presieve per element and fragment family, holding every antecedent of the element"""
    el = category_of_elements(frag.interp, name=f"el({frag.model.name})")
    interp = frag.interp
    generators: Dict[str, List[Presieve]] = {x: [] for x in el.category.objects}
    notes = []
    for x in el.category.objects:
        phi, a = el.points[x]
        for R in frag.basis.at(phi):
            arrows = [element_id(theta, b) for theta in R.sorted_arrows
                      for b in interp.carrier(frag.category.dom(theta)) if interp.act(theta, b) == a]
            if not arrows:
                logger.warning(f"Element {x} has no antecedents along {R}; the empty sieve covers it")
                notes.append(f"empty antecedent family at {x} from {R}")
            generators[x].append(Presieve.of(x, arrows))
    basis = saturate_basis(el.category, generators, f"ant({frag.model.name})")
    logger.info(f"Antecedent basis on {el.category.name}: {basis.count()} families")
    return OverSite(name or f"over({frag.name},{frag.model.name})", el.category, basis, frag, el.projection,
                    tuple(lift_designated_cones(frag, el)), element_data=el, notes=tuple(notes))


def check_cartesian(over: OverSite) -> ValidationReport:
    """Verify each designated cone of the site by the exhaustive universal-property check"""
    report = ValidationReport(f"cartesian {over.name}")
    for cone in over.cones:
        holds, _ = is_limit(over.elements, cone.diagram, cone.apex, cone.witness.leg_map)
        if not holds:
            report.add("limit", cone.apex, cone.diagram.name)
    return report


@dataclass(frozen=True)
class ImageFactorization:
    """An arrow split through the listed image formula of its underlying fragment arrow"""
    arrow: str
    image: Optional[str]
    cover: Optional[str]
    inclusion: Optional[str]
    status: str


def image_factorizations(over: OverSite) -> List[ImageFactorization]:
    """Factor each fragment arrow through its image formula, where that formula is listed"""
    frag = over.fragment
    cat = frag.category
    results = []
    for arrow in cat.arrow_ids:
        if cat.is_identity(arrow):
            continue
        image = frag.image_formula(arrow)
        if image is None:
            results.append(ImageFactorization(arrow, None, None, None, "skipped"))
            continue
        a = frag.arrows[arrow]
        target = frag.formulas[a.cod]
        cover = frag.arrow_for(a.dom, image, a.theta)
        ys, zs = variables("y", target.sorts), variables("z", target.sorts)
        inclusion_theta = FormulaInContext(
            ys + zs, conj(tuple_eq(names(zs), names(ys)), frag.formulas[image].instantiate(names(ys))))
        inclusion = frag.arrow_for(image, a.cod, inclusion_theta)
        factored = cover is not None and inclusion is not None and cat.compose(inclusion, cover) == arrow
        results.append(ImageFactorization(arrow, image, cover, inclusion, "factored" if factored else "not-factored"))
    skipped = sum(1 for r in results if r.status == "skipped")
    if skipped:
        logger.warning(f"{skipped} arrows of {frag.name} have no listed image formula")
    return results


@dataclass(frozen=True, eq=False)
class PresheafModel:
    """A model of the fragment in presheaves on a finite site, given by structures and restriction homs

    homs[u] for u: c -> c' maps structures[c'] to structures[c].
    """
    site: FinCategory
    topology: CoverageBasis
    fragment: FragmentSite
    structures: Mapping[str, FinStructure]
    homs: Mapping[str, ModelHom]
    name: str = "model"

    @classmethod
    def constant(cls, site: FinCategory, topology: CoverageBasis, fragment: FragmentSite,
                 M: Optional[FinStructure] = None, name: str = "constant") -> "PresheafModel":
        M = M or fragment.model
        return cls(site, topology, fragment, {c: M for c in site.objects},
                   {u: ModelHom.identity(M) for u in site.arrows}, name)

    def hom(self, u: str) -> ModelHom:
        return self.homs[u]

    def restrict(self, u: str, phi: str, values: Tuple) -> Tuple:
        return self.homs[u].apply(self.fragment.formulas[phi].sorts, values)

    def presheaf(self, phi: str) -> FinPresheaf:
        """The presheaf c ↦ [[φ]] in the structure at c"""
        fic = self.fragment.formulas[phi]
        sections = {c: eval_formula(self.structures[c], fic) for c in self.site.objects}
        restrictions = {u: {t: self.restrict(u, phi, t) for t in sections[self.site.cod(u)]}
                        for u in self.site.arrow_ids}
        return FinPresheaf.build(self.site, sections, restrictions, f"[[{phi}]]")

    @cached_property
    def interpretations(self):
        return {c: self.fragment.interpret(self.structures[c], f"F_{self.name}({c})") for c in self.site.objects}


def validate_presheaf_model(model: PresheafModel) -> ValidationReport:
    report = ValidationReport(model.name)
    site = model.site
    for c in site.objects:
        if c not in model.structures:
            report.add("structure-missing", c)
            continue
        theory_report = check_model(model.structures[c], model.fragment.fragment_theory)
        if not theory_report.valid:
            report.add("fragment-theory", c, detail=theory_report.violations[0].describe())
    if not report.valid:
        return report
    for u in site.arrow_ids:
        d, c = site.arrows[u]
        h = model.homs.get(u)
        if h is None:
            report.add("hom-missing", u)
            continue
        hom_report = check_hom(model.structures[c], model.structures[d], h)
        if not hom_report.valid:
            report.add("hom", u, detail=hom_report.violations.violations[0].describe())
    if not report.valid:
        return report
    sig = model.fragment.theory.signature
    for c, ident in site.identities.items():
        if any(model.homs[ident].maps[s][x] != x for s in sig.sorts for x in model.structures[c].carrier(s)):
            report.add("hom-identity", ident)
    for (g, f), h in sorted(site.composition.items()):
        source = model.structures[site.cod(g)]
        if any(model.homs[f].maps[s][model.homs[g].maps[s][x]] != model.homs[h].maps[s][x]
               for s in sig.sorts for x in source.carrier(s)):
            report.add("hom-composition", g, f)
    return report


@dataclass(frozen=True, eq=False)
class ElementStack:
    """The strict indexed category c ↦ elements of the fragment interpreted at c"""
    indexed: IndexedCategory
    elements: Mapping[str, ElementsCategory]


def element_stack(model: PresheafModel) -> ElementStack:
    frag = model.fragment
    site = model.site
    elements = {c: category_of_elements(model.interpretations[c], name=f"el({c})") for c in site.objects}
    transitions = {}
    for u in site.arrow_ids:
        d, c = site.arrows[u]
        source, target = elements[c], elements[d]
        on_objects = {}
        for x, (phi, a) in source.points.items():
            on_objects[x] = target.object_of(phi, model.restrict(u, phi, a))
        on_arrows = {}
        for m in source.category.arrow_ids:
            theta = source.projection.arr(m)
            _, b = source.points[source.category.dom(m)]
            on_arrows[m] = element_id(theta, model.restrict(u, frag.category.dom(theta), b))
        transitions[u] = FinFunctor(source.category, target.category, on_objects, on_arrows, f"{model.name}({u})")
    return ElementStack(IndexedCategory(site, {c: e.category for c, e in elements.items()}, transitions,
                                        f"el[{model.name}]"), elements)


def _fiber_presheaf(model: PresheafModel, P_i: FinPresheaf, theta: str, phi: str, c: str,
                    a: Tuple) -> FinPresheaf:
    """Sections (v: d -> c, b) with θ(b) equal to a restricted along v"""
    site = model.site
    interp = model.interpretations
    sections: Dict[str, List[Tuple[str, Tuple]]] = {}
    for d in site.objects:
        sections[d] = [(v, b) for v in site.hom(d, c) for b in P_i.sections(d)
                       if interp[d].act(theta, b) == model.restrict(v, phi, a)]
    restrictions = {}
    for w in site.arrow_ids:
        d2, d = site.arrows[w]
        restrictions[w] = {(v, b): (site.compose(v, w), P_i.restrict(w, b)) for v, b in sections[d]}
    return FinPresheaf.build(site, sections, restrictions, f"{theta}^-1({render(a)})")


def _minimal_covering_sets(Q: FinPresheaf, topology: CoverageBasis) -> List[Tuple[Tuple[str, Tuple], ...]]:
    all_sections = [(d, s) for d in Q.category.objects for s in Q.sections(d)]
    found: List[Set] = []
    result = []
    for subset in bounded_subsets(all_sections):
        chosen = set(subset)
        if any(kept <= chosen for kept in found):
            continue
        if jointly_locally_surjective(Q, list(subset), topology):
            found.append(chosen)
            result.append(subset)
    return result


def antecedent_basis_general(model: PresheafModel, name: Optional[str] = None) -> OverSite:
    """The antecedent basis on the Grothendieck total of the element stack of a model over (C, J)"""
    frag = model.fragment
    site, J = model.site, model.topology
    presheaves = {phi: model.presheaf(phi) for phi in sorted(frag.formulas)}

    # Step 1: every interpretation is a sheaf
    for phi, P in presheaves.items():
        if not is_sheaf(P, J):
            raise PreconditionError("sheaf-interpretation", f"[[{phi}]] is not a {J.name}-sheaf")

    # Step 2: fragment covers interpret to locally surjective families
    for phi in sorted(frag.formulas):
        for R in frag.basis.at(phi):
            image = {c: {model.interpretations[c].act(theta, b) for theta in R.arrows
                         for b in presheaves[frag.category.dom(theta)].sections(c)} for c in site.objects}
            if not locally_in_image(presheaves[phi], image, J):
                raise PreconditionError("covering-interpretation", f"{R} is not locally surjective")

    # Step 3: the total category of the element stack
    stack = element_stack(model)
    total = grothendieck_construction(stack.indexed, name=f"int({model.name})")

    # Step 4: antecedent families, one per choice of covering sections of each fiber presheaf
    generators: Dict[str, List[Presieve]] = {x: [] for x in total.category.objects}
    notes = []
    for x, (c, fiber_object) in sorted(total.points.items()):
        phi, a = stack.elements[c].points[fiber_object]
        for R in frag.basis.at(phi):
            combined: List[Tuple[str, ...]] = [()]
            for theta in R.sorted_arrows:
                Q = _fiber_presheaf(model, presheaves[frag.category.dom(theta)], theta, phi, c, a)
                options = []
                for subset in _minimal_covering_sets(Q, J):
                    options.append(tuple(total_arrow_id(v, element_id(theta, b), fiber_object)
                                         for _, (v, b) in subset))
                combined = [left + right for left in combined for right in options]
            if not combined:
                notes.append(f"no covering antecedents at {x} from {R}")
            for arrows in combined:
                generators[x].append(Presieve.of(x, arrows))

    # Step 5: saturate
    basis = saturate_basis(total.category, generators, f"ant({model.name})")
    projection = FinFunctor(
        total.category, frag.category,
        {y: stack.elements[c].points[obj][0] for y, (c, obj) in total.points.items()},
        {f: stack.elements[site.dom(u)].projection.arr(m) for f, (u, m, _) in total.parts.items()},
        "fragment-projection")
    logger.info(f"General antecedent basis on {total.category.name}: {basis.count()} families")
    return OverSite(name or f"over({frag.name},{model.name})", total.category, basis, frag, projection,
                    base_projection=total.projection, total=total, notes=tuple(notes))


def agrees_with_set_based(general: OverSite, set_over: OverSite) -> bool:
    """Compare generated topologies after identifying the total over the point with the elements category"""
    total = general.total
    if total is None or len(total.indexed.base.objects) != 1:
        raise PreconditionError("terminal-site", "the general site is not over the terminal category")
    families: Dict[str, List[Presieve]] = {}
    for x, (_, obj) in total.points.items():
        families.setdefault(obj, [])
        for R in general.basis.at(x):
            families[obj].append(Presieve.of(obj, [total.parts[f][1] for f in R.arrows]))
    if set(families) != set(set_over.elements.objects):
        return False
    translated = CoverageBasis.build(set_over.elements, families, f"{general.basis.name}|*")
    return same_topology(set_over.elements, translated, set_over.basis)
