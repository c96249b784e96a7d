"""Compile a finite fragment of the syntactic site together with its model"""
import dataclasses
import logging
from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple

from overtopos_sites.config.config import COMPANION_BOUND, MAX_FRAGMENT_ARROWS
from overtopos_sites.src.categories.fincat import FinCategory, SetValuedFunctor, validate_category
from overtopos_sites.src.errors import FragmentError
from overtopos_sites.src.logic.semantics import (
    FinStructure,
    check_functional,
    check_model,
    enumerate_structures,
    eval_formula,
    split_graph,
)
from overtopos_sites.src.logic.syntax import (
    TOP,
    CoherentTheory,
    Context,
    FormulaInContext,
    Sequent,
    conj,
    disj,
    exists,
    tuple_eq,
)
from overtopos_sites.src.sheaves.cartesian import is_cartesian_functor
from overtopos_sites.src.topologies.coverage import CoverageBasis, Presieve, check_basis, saturate_basis

logger = logging.getLogger(__name__)

Graph = Dict[Tuple, Tuple]


@dataclass(frozen=True)
class FragmentArrow:
    """A θ-formula read as an arrow between two fragment formulas"""
    name: str
    dom: str
    cod: str
    theta: FormulaInContext
    origin: str = "declared"


@dataclass(frozen=True)
class DesignatedSquare:
    """A commuting square p1, p2 over the cospan f, g, sent to a pullback by every companion"""
    f: str
    g: str
    apex: str
    p1: str
    p2: str


def variables(prefix: str, sorts: Sequence[str]) -> Context:
    return tuple((f"{prefix}{i}", s) for i, s in enumerate(sorts))


def names(context: Context) -> List[str]:
    return [v for v, _ in context]


@dataclass(frozen=True, eq=False)
class FragmentSite:
    """A finite cartesian fragment of the syntactic site with its interpretation in a model"""
    name: str
    theory: CoherentTheory
    model: FinStructure
    formulas: Mapping[str, FormulaInContext]
    arrows: Mapping[str, FragmentArrow]
    aliases: Mapping[str, str]
    category: FinCategory
    basis: CoverageBasis
    interp: SetValuedFunctor
    covers: Tuple[Presieve, ...]
    squares: Tuple[DesignatedSquare, ...]
    terminal: str
    companions: Tuple[FinStructure, ...]
    fragment_theory: CoherentTheory
    graph_keys: Mapping[Tuple, str]

    def resolve(self, arrow: str) -> str:
        return self.aliases.get(arrow, arrow)

    def formula_by_key(self, phi: FormulaInContext) -> Optional[str]:
        for name in sorted(self.formulas):
            if self.formulas[name].key == phi.key:
                return name
        return None

    def sort_formula(self, sort: str) -> Optional[str]:
        return self.formula_by_key(FormulaInContext((("x", sort),), TOP))

    def product_formula(self, sorts: Sequence[str]) -> Optional[str]:
        return self.formula_by_key(FormulaInContext(variables("x", sorts), TOP))

    def arrow_for(self, dom: str, cod: str, theta: FormulaInContext) -> Optional[str]:
        """The fragment arrow whose graph agrees with theta in every companion"""
        source, target = self.formulas[dom], self.formulas[cod]
        if theta.sorts != source.sorts + target.sorts:
            return None
        graphs = []
        for C in self.companions:
            if not check_functional(C, theta, source, target):
                return None
            graphs.append(frozenset(eval_formula(C, theta)))
        return self.graph_keys.get((dom, cod, tuple(graphs)))

    def square_for(self, f: str, g: str) -> Optional[DesignatedSquare]:
        for square in self.squares:
            if (square.f, square.g) == (f, g):
                return square
        return None

    def image_formula(self, arrow: str) -> Optional[str]:
        """The fragment formula {y. ∃x θ(x, y)} of an arrow, if listed"""
        a = self.arrows[arrow]
        source, target = self.formulas[a.dom], self.formulas[a.cod]
        xs, ys = variables("u", source.sorts), variables("v", target.sorts)
        image = FormulaInContext(ys, exists(xs, a.theta.instantiate(names(xs) + names(ys))))
        return self.formula_by_key(image)

    def interpret(self, N: FinStructure, name: str = "") -> SetValuedFunctor:
        """The interpretation functor of the fragment in another structure"""
        carriers = {phi: eval_formula(N, fic) for phi, fic in self.formulas.items()}
        actions = {}
        for arrow, a in self.arrows.items():
            arity = len(self.formulas[a.dom].context)
            table: Graph = {}
            for x, y in split_graph(eval_formula(N, a.theta), arity):
                if table.get(x, y) != y:
                    raise FragmentError("functional", f"{arrow} is not single-valued in {N.name}")
                table[x] = y
            if set(table) != set(carriers[a.dom]):
                raise FragmentError("functional", f"{arrow} is not total in {N.name}")
            actions[arrow] = table
        return SetValuedFunctor.build(self.category, carriers, actions, name or f"[[{self.name}]]_{N.name}")

    def reinterpret(self, N: FinStructure) -> "FragmentSite":
        """The same compiled fragment with N as its model"""
        report = check_model(N, self.fragment_theory)
        if not report.valid:
            raise FragmentError(
                "fragment-theory", f"{N.name} violates {report.violations[0].describe()}")
        return dataclasses.replace(self, model=N, interp=self.interpret(N))


def _graph_of(C: FinStructure, arrow: FragmentArrow, formulas: Mapping[str, FormulaInContext]) -> Graph:
    arity = len(formulas[arrow.dom].context)
    return dict(split_graph(eval_formula(C, arrow.theta), arity))


def _freeze(graphs: Sequence[Graph]) -> Tuple[FrozenSet, ...]:
    return tuple(frozenset(x + y for x, y in g.items()) for g in graphs)


def identity_theta(phi: FormulaInContext) -> FormulaInContext:
    xs, ys = variables("x", phi.sorts), variables("y", phi.sorts)
    return FormulaInContext(xs + ys, conj(tuple_eq(names(ys), names(xs)), phi.instantiate(names(xs))))


def terminal_theta(phi: FormulaInContext) -> FormulaInContext:
    xs = variables("x", phi.sorts)
    return FormulaInContext(xs, phi.instantiate(names(xs)))


def composite_theta(f: FragmentArrow, g: FragmentArrow, formulas: Mapping[str, FormulaInContext]) -> FormulaInContext:
    """{x, y. ∃z (θ_f(x, z) ∧ θ_g(z, y))}"""
    xs = variables("x", formulas[f.dom].sorts)
    zs = variables("w", formulas[f.cod].sorts)
    ys = variables("y", formulas[g.cod].sorts)
    body = exists(zs, conj(f.theta.instantiate(names(xs) + names(zs)),
                           g.theta.instantiate(names(zs) + names(ys))))
    return FormulaInContext(xs + ys, body).normalized()


def _companions(theory: CoherentTheory, model: FinStructure, witnesses: Iterable[FinStructure],
                declared: Sequence[FragmentArrow], formulas: Mapping[str, FormulaInContext],
                bound: int) -> Tuple[FinStructure, ...]:
    companions = [model]
    for W in witnesses:
        if not check_model(W, theory).valid:
            raise FragmentError("witness-model", f"witness {W.name} is not a model of {theory.name}")
        companions.append(W)
    companions.extend(enumerate_structures(theory, bound))
    kept = [C for C in companions
            if all(check_functional(C, a.theta, formulas[a.dom], formulas[a.cod]) for a in declared)]
    logger.debug(f"{len(kept)} of {len(companions)} companion structures keep every declared arrow functional")
    return tuple(kept)


def compile_fragment(theory: CoherentTheory, model: FinStructure, formulas: Mapping[str, FormulaInContext],
                     arrows: Iterable[FragmentArrow] = (), covers: Iterable[Tuple[str, Iterable[str]]] = (),
                     witnesses: Iterable[FinStructure] = (), name: str = "fragment",
                     companion_bound: Optional[int] = None) -> FragmentSite:
    """Build the finite site of a list of formulas and θ-arrows interpreted in model"""
    sig = theory.signature
    formulas = dict(formulas)
    declared = sorted(arrows, key=lambda a: a.name)

    # Step 1: inputs are well typed and model is a model
    report = check_model(model, theory)
    if not report.valid:
        raise FragmentError("model", f"{model.name} violates {report.violations[0].describe()}")
    seen_keys: Dict[Tuple, str] = {}
    for phi_name in sorted(formulas):
        fic = formulas[phi_name]
        fic.check(sig)
        if fic.key in seen_keys:
            raise FragmentError("duplicate-formula", f"{phi_name} and {seen_keys[fic.key]} are the same formula")
        seen_keys[fic.key] = phi_name
    terminal = seen_keys.get(((), "top"))
    if terminal is None:
        raise FragmentError("terminal-formula", "the formula list must contain [].top")
    for a in declared:
        if a.dom not in formulas or a.cod not in formulas:
            raise FragmentError("arrow-typing", f"{a.name} refers to an unknown formula")
        if a.theta.sorts != formulas[a.dom].sorts + formulas[a.cod].sorts:
            raise FragmentError("arrow-typing", f"the context of {a.name} is not dom context followed by cod context")
        a.theta.check(sig)
        if not check_functional(model, a.theta, formulas[a.dom], formulas[a.cod]):
            raise FragmentError("functional", f"{a.name} is not the graph of a function in {model.name}")

    # Step 2: companion structures decide which arrows are equal
    companions = _companions(theory, model, witnesses, declared, formulas,
                             COMPANION_BOUND if companion_bound is None else companion_bound)

    canonical: Dict[str, FragmentArrow] = {}
    graphs: Dict[str, Tuple[Graph, ...]] = {}
    keys: Dict[Tuple, str] = {}
    aliases: Dict[str, str] = {}

    def admit(arrow: FragmentArrow, arrow_graphs: Tuple[Graph, ...]) -> str:
        if arrow.name in canonical or arrow.name in aliases:
            raise FragmentError("duplicate-arrow", f"arrow name {arrow.name} is used twice")
        key = (arrow.dom, arrow.cod, _freeze(arrow_graphs))
        if key in keys:
            aliases[arrow.name] = keys[key]
            return keys[key]
        if len(canonical) >= MAX_FRAGMENT_ARROWS:
            raise FragmentError("arrow-closure", f"more than {MAX_FRAGMENT_ARROWS} arrows")
        keys[key] = arrow.name
        canonical[arrow.name] = arrow
        graphs[arrow.name] = arrow_graphs
        return arrow.name

    def graphs_of(arrow: FragmentArrow) -> Tuple[Graph, ...]:
        return tuple(_graph_of(C, arrow, formulas) for C in companions)

    identities = {}
    for phi_name in sorted(formulas):
        ident = FragmentArrow(f"id_{phi_name}", phi_name, phi_name, identity_theta(formulas[phi_name]), "identity")
        identities[phi_name] = admit(ident, graphs_of(ident))
    for a in declared:
        admit(a, graphs_of(a))
    for phi_name in sorted(formulas):
        if phi_name != terminal:
            bang = FragmentArrow(f"!{phi_name}", phi_name, terminal, terminal_theta(formulas[phi_name]), "terminal")
            admit(bang, graphs_of(bang))

    # Step 3: close under composition
    composition: Dict[Tuple[str, str], str] = {}
    added = True
    while added:
        added = False
        for f in sorted(canonical):
            for g in sorted(canonical):
                if canonical[g].dom != canonical[f].cod or (g, f) in composition:
                    continue
                composite_graphs = tuple({x: gg[y] for x, y in gf.items()}
                                         for gf, gg in zip(graphs[f], graphs[g]))
                key = (canonical[f].dom, canonical[g].cod, _freeze(composite_graphs))
                if key in keys:
                    composition[(g, f)] = keys[key]
                    continue
                theta = composite_theta(canonical[f], canonical[g], formulas)
                arrow = FragmentArrow(f"{g}.{f}", canonical[f].dom, canonical[g].cod, theta, "composite")
                composition[(g, f)] = admit(arrow, composite_graphs)
                added = True
    category = FinCategory(name, tuple(sorted(formulas)), {a: (x.dom, x.cod) for a, x in canonical.items()},
                           identities, composition)
    violations = validate_category(category)
    if not violations.valid:
        raise FragmentError("category", violations.violations[0].describe())
    logger.info(f"Compiled {name}: {len(formulas)} formulas, {len(canonical)} arrows, "
                f"{len(companions)} companions")

    interp = SetValuedFunctor.build(
        category, {phi: eval_formula(model, fic) for phi, fic in formulas.items()},
        {a: graphs[a][0] for a in canonical}, f"F_{model.name}")

    # Step 4: declared covers
    families: List[Presieve] = []
    for codomain, members in covers:
        members = [aliases.get(m, m) for m in members]
        for m in members:
            if m not in canonical or canonical[m].cod != codomain:
                raise FragmentError("cover-typing", f"{m} is not an arrow into {codomain}")
        image = {interp.act(m, x) for m in members for x in interp.carrier(canonical[m].dom)}
        if image != set(interp.carrier(codomain)):
            raise FragmentError("surjective-cover",
                                f"family {sorted(members)} is not jointly surjective onto {codomain}")
        families.append(Presieve.of(codomain, members))
    families = sorted(set(families), key=lambda p: p.key)

    # Step 5: designated pullback squares
    squares = _designated_squares(category, canonical, formulas, graphs, companions)
    by_cospan = {(s.f, s.g) for s in squares}
    for family in families:
        members = [m for m in family.sorted_arrows if not category.is_identity(m)]
        for i, f in enumerate(members):
            for g in members[i:]:
                if (f, g) not in by_cospan:
                    raise FragmentError("cover-pullbacks", f"no listed formula is a pullback of {f} and {g}")

    # Step 6: the basis generated by the declared covers
    generators: Dict[str, List[Presieve]] = {}
    for family in families:
        generators.setdefault(family.codomain, []).append(family)
    basis = saturate_basis(category, generators, f"B({name})")
    refinement = check_basis(category, basis).by_condition("b")
    if refinement:
        raise FragmentError("closure violation", f"covers are not stable: {refinement[0].describe()}")
    cartesian = is_cartesian_functor(interp)
    if not cartesian.valid:
        raise FragmentError("cartesian", f"{interp.name} does not preserve {cartesian.violations[0].describe()}")

    fragment_theory = theory.extend(
        _fragment_sequents(category, canonical, formulas, families, squares), f"{theory.name}|{name}")
    return FragmentSite(name, theory, model, formulas, canonical, aliases, category, basis, interp,
                        tuple(families), tuple(squares), terminal, companions, fragment_theory, keys)


def _designated_squares(category: FinCategory, arrows: Mapping[str, FragmentArrow],
                        formulas: Mapping[str, FormulaInContext], graphs: Mapping[str, Tuple[Graph, ...]],
                        companions: Sequence[FinStructure]) -> List[DesignatedSquare]:
    carriers = [{phi: eval_formula(C, fic) for phi, fic in formulas.items()} for C in companions]
    non_identity = [a for a in category.arrow_ids if not category.is_identity(a)]
    squares = []
    for i, f in enumerate(non_identity):
        for g in non_identity[i:]:
            if category.cod(f) != category.cod(g):
                continue
            A, B = category.dom(f), category.dom(g)
            fibre_products = [{(a, b) for a in carriers[k][A] for b in carriers[k][B]
                               if graphs[f][k][a] == graphs[g][k][b]} for k in range(len(companions))]
            found = None
            for P in category.objects:
                for p1 in category.hom(P, A):
                    for p2 in category.hom(P, B):
                        if category.compose(f, p1) != category.compose(g, p2):
                            continue
                        if all(_bijects(carriers[k][P], graphs[p1][k], graphs[p2][k], fibre_products[k])
                               for k in range(len(companions))):
                            found = DesignatedSquare(f, g, P, p1, p2)
                            break
                    if found:
                        break
                if found:
                    break
            if found:
                squares.append(found)
    logger.debug(f"{len(squares)} designated pullback squares")
    return squares


def _bijects(apex: Iterable[Tuple], p1: Graph, p2: Graph, target: set) -> bool:
    images = [(p1[u], p2[u]) for u in apex]
    return len(set(images)) == len(images) and set(images) == target


def _fragment_sequents(category: FinCategory, arrows: Mapping[str, FragmentArrow],
                       formulas: Mapping[str, FormulaInContext], families: Sequence[Presieve],
                       squares: Sequence[DesignatedSquare]) -> List[Sequent]:
    """Sequents making a structure interpret the fragment as a cartesian functor preserving its covers"""
    sequents: List[Sequent] = []

    def at(arrow: str, left: Context, right: Context):
        return arrows[arrow].theta.instantiate(names(left) + names(right))

    def holds(phi: str, context: Context):
        return formulas[phi].instantiate(names(context))

    # functionality of every arrow
    for a in category.arrow_ids:
        if category.is_identity(a):
            continue
        dom, cod = category.arrows[a]
        xs, ys = variables("x", formulas[dom].sorts), variables("y", formulas[cod].sorts)
        ys2 = variables("v", formulas[cod].sorts)
        sequents.append(Sequent(xs + ys, at(a, xs, ys), conj(holds(dom, xs), holds(cod, ys))))
        sequents.append(Sequent(xs + ys + ys2, conj(at(a, xs, ys), at(a, xs, ys2)), tuple_eq(names(ys), names(ys2))))
        sequents.append(Sequent(xs, holds(dom, xs), exists(ys, at(a, xs, ys))))

    # composition equations
    for (g, f), h in sorted(category.composition.items()):
        if category.is_identity(g) or category.is_identity(f):
            continue
        xs = variables("x", formulas[category.dom(f)].sorts)
        zs = variables("w", formulas[category.cod(f)].sorts)
        ys = variables("y", formulas[category.cod(g)].sorts)
        sequents.append(Sequent(xs + zs + ys, conj(at(f, xs, zs), at(g, zs, ys)), at(h, xs, ys)))

    # declared covers
    for family in families:
        ys = variables("y", formulas[family.codomain].sorts)
        alternatives = []
        for m in family.sorted_arrows:
            xs = variables("x", formulas[category.dom(m)].sorts)
            alternatives.append(exists(xs, at(m, xs, ys)))
        sequents.append(Sequent(ys, holds(family.codomain, ys), disj(*alternatives) if alternatives else disj()))

    # designated pullbacks are preserved
    for square in squares:
        A, B, C = category.dom(square.f), category.dom(square.g), category.cod(square.f)
        us, us2 = variables("u", formulas[square.apex].sorts), variables("t", formulas[square.apex].sorts)
        xs, ys = variables("x", formulas[A].sorts), variables("y", formulas[B].sorts)
        cs = variables("c", formulas[C].sorts)
        sequents.append(Sequent(
            us + us2 + xs + ys,
            conj(at(square.p1, us, xs), at(square.p2, us, ys), at(square.p1, us2, xs), at(square.p2, us2, ys)),
            tuple_eq(names(us), names(us2))))
        sequents.append(Sequent(
            xs + ys,
            exists(cs, conj(at(square.f, xs, cs), at(square.g, ys, cs))),
            exists(us, conj(at(square.p1, us, xs), at(square.p2, us, ys)))))
    return sequents


def describe_arrow(site: FragmentSite, arrow: str) -> str:
    a = site.arrows[arrow]
    return f"{arrow}: {a.dom} -> {a.cod} = {a.theta}"
