"""Finite structures, model homomorphisms and evaluation of coherent formulas"""
import itertools
import logging
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Hashable, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple

from overtopos_sites.src.categories.fincat import ValidationReport, render, sort_key
from overtopos_sites.src.errors import PreconditionError
from overtopos_sites.src.logic.syntax import (
    And,
    App,
    Bot,
    CoherentTheory,
    Eq,
    Exists,
    Formula,
    FormulaInContext,
    Or,
    Rel,
    Sequent,
    Signature,
    Term,
    Top,
    Var,
)

logger = logging.getLogger(__name__)

Element = Hashable


@dataclass(frozen=True, eq=False)
class FinStructure:
    """A finite interpretation of a signature"""
    signature: Signature
    carriers: Mapping[str, Tuple[Element, ...]]
    functions: Mapping[str, Mapping[Tuple[Element, ...], Element]]
    relations: Mapping[str, FrozenSet[Tuple[Element, ...]]]
    name: str = ""
    extents: Dict[FormulaInContext, FrozenSet[Tuple[Element, ...]]] = field(
        default_factory=dict, init=False, repr=False, compare=False)

    @classmethod
    def build(cls, signature: Signature, carriers: Mapping[str, Iterable[Element]],
              functions: Optional[Mapping[str, Mapping]] = None,
              relations: Optional[Mapping[str, Iterable[Tuple]]] = None, name: str = "") -> "FinStructure":
        sorted_carriers = {s: tuple(sorted(set(carriers.get(s, ())), key=sort_key)) for s in signature.sorts}
        tables = {}
        for f, table in (functions or {}).items():
            tables[f] = {(k if isinstance(k, tuple) else (k,)): v for k, v in table.items()}
        rels = {r: frozenset(tuple(t) if isinstance(t, (tuple, list)) else (t,) for t in tuples)
                for r, tuples in (relations or {}).items()}
        for r in signature.relations:
            rels.setdefault(r, frozenset())
        return cls(signature, sorted_carriers, tables, rels, name)

    def carrier(self, sort: str) -> Tuple[Element, ...]:
        return self.carriers.get(sort, ())

    def product(self, sorts: Sequence[str]) -> Iterator[Tuple[Element, ...]]:
        return itertools.product(*[self.carrier(s) for s in sorts])

    def size_vector(self) -> Tuple[int, ...]:
        return tuple(len(self.carrier(s)) for s in self.signature.sorts)


def validate_structure(M: FinStructure) -> ValidationReport:
    """Check that every table is total and well typed"""
    report = ValidationReport(M.name or "structure")
    sig = M.signature
    for f, (args, result) in sorted(sig.functions.items()):
        table = M.functions.get(f)
        if table is None:
            report.add("function-missing", f)
            continue
        target = set(M.carrier(result))
        for point in M.product(args):
            if point not in table:
                report.add("function-total", f, render(point))
            elif table[point] not in target:
                report.add("function-typing", f, render(point), detail=f"{render(table[point])} not in {result}")
    for r, args in sorted(sig.relations.items()):
        allowed = set(M.product(args))
        for t in sorted(M.relations.get(r, ()), key=sort_key):
            if t not in allowed:
                report.add("relation-typing", r, render(t))
    return report


def eval_term(M: FinStructure, term: Term, env: Mapping[str, Element]) -> Element:
    if isinstance(term, Var):
        return env[term.name]
    args = tuple(eval_term(M, a, env) for a in term.args)
    return M.functions[term.symbol][args]


def satisfies(M: FinStructure, formula: Formula, env: Dict[str, Element]) -> bool:
    """Truth of formula under an assignment of its free variables"""
    if isinstance(formula, Top):
        return True
    if isinstance(formula, Bot):
        return False
    if isinstance(formula, Eq):
        return eval_term(M, formula.left, env) == eval_term(M, formula.right, env)
    if isinstance(formula, Rel):
        return tuple(eval_term(M, a, env) for a in formula.args) in M.relations.get(formula.symbol, ())
    if isinstance(formula, And):
        return all(satisfies(M, p, env) for p in formula.parts)
    if isinstance(formula, Or):
        return any(satisfies(M, p, env) for p in formula.parts)
    names = [v for v, _ in formula.variables]
    saved = {v: env[v] for v in names if v in env}
    try:
        for values in M.product([s for _, s in formula.variables]):
            env.update(zip(names, values))
            if satisfies(M, formula.body, env):
                return True
        return False
    finally:
        for v in names:
            env.pop(v, None)
        env.update(saved)


def eval_formula(M: FinStructure, phi: FormulaInContext) -> FrozenSet[Tuple[Element, ...]]:
    """The tuples of the context product satisfying phi, remembered in M.extents"""
    cached = M.extents.get(phi)
    if cached is not None:
        return cached
    phi.check(M.signature)
    names = phi.variables
    result = frozenset(point for point in M.product(phi.sorts)
                       if satisfies(M, phi.body, dict(zip(names, point))))
    M.extents[phi] = result
    return result


def sorted_tuples(tuples: Iterable[Tuple]) -> List[Tuple]:
    return sorted(tuples, key=sort_key)


def sequent_counterexample(M: FinStructure, sigma: Sequent) -> Optional[Tuple[Element, ...]]:
    """The first tuple satisfying the premise but not the conclusion, if any"""
    premise = eval_formula(M, FormulaInContext(sigma.context, sigma.premise))
    conclusion = eval_formula(M, FormulaInContext(sigma.context, sigma.conclusion))
    missing = premise - conclusion
    return sorted_tuples(missing)[0] if missing else None


def check_sequent(M: FinStructure, sigma: Sequent) -> bool:
    return sequent_counterexample(M, sigma) is None


def check_model(M: FinStructure, theory: CoherentTheory) -> ValidationReport:
    """Report every axiom of theory that fails in M, with its first counterexample"""
    if M.signature != theory.signature:
        raise PreconditionError("shared-signature", f"{M.name} does not interpret the signature of {theory.name}")
    report = ValidationReport(f"{M.name or 'structure'} |= {theory.name}")
    report.extend(validate_structure(M))
    if not report.valid:
        return report
    for index, sigma in enumerate(theory.axioms):
        witness = sequent_counterexample(M, sigma)
        if witness is not None:
            report.add("axiom", str(index), render(witness), detail=str(sigma))
    return report


def split_graph(graph: Iterable[Tuple], arity: int) -> List[Tuple[Tuple, Tuple]]:
    return [(t[:arity], t[arity:]) for t in graph]


def check_functional(M: FinStructure, theta: FormulaInContext, dom: FormulaInContext,
                     cod: FormulaInContext) -> bool:
    """True iff theta is the graph of a total function from the dom set to the cod set"""
    if theta.sorts != dom.sorts + cod.sorts:
        raise PreconditionError("well-typed", f"{theta} is not over the joined contexts")
    source, target = eval_formula(M, dom), eval_formula(M, cod)
    images: Dict[Tuple, List[Tuple]] = {}
    for a, b in split_graph(eval_formula(M, theta), len(dom.context)):
        if a not in source or b not in target:
            return False
        images.setdefault(a, []).append(b)
    return all(len(images.get(a, ())) == 1 for a in source)


@dataclass(frozen=True, eq=False)
class ModelHom:
    """Per-sort maps between the carriers of two structures"""
    source: FinStructure
    target: FinStructure
    maps: Mapping[str, Mapping[Element, Element]]
    name: str = ""

    def apply(self, sorts: Sequence[str], values: Sequence[Element]) -> Tuple[Element, ...]:
        return tuple(self.maps[s][v] for s, v in zip(sorts, values))

    @classmethod
    def identity(cls, M: FinStructure) -> "ModelHom":
        return cls(M, M, {s: {x: x for x in M.carrier(s)} for s in M.signature.sorts}, "id")


@dataclass
class HomReport:
    """Homomorphism laws plus per-formula naturality"""
    violations: ValidationReport
    naturality: Dict[str, bool] = field(default_factory=dict)

    @property
    def valid(self) -> bool:
        return self.violations.valid

    @property
    def natural(self) -> bool:
        return all(self.naturality.values())


def check_hom(N: FinStructure, M: FinStructure, h: ModelHom,
              formulas: Mapping[str, FormulaInContext] = None) -> HomReport:
    """Check that h commutes with functions and preserves relations

    For each named formula, naturality means h maps its interpretation in N into
    its interpretation in M.
    """
    if N.signature != M.signature:
        raise PreconditionError("shared-signature", "source and target interpret different signatures")
    sig = N.signature
    report = ValidationReport(h.name or "hom")
    for s in sig.sorts:
        table = h.maps.get(s, {})
        targets = set(M.carrier(s))
        for x in N.carrier(s):
            if x not in table:
                report.add("hom-total", s, render(x))
            elif table[x] not in targets:
                report.add("hom-typing", s, render(x))
    if not report.valid:
        return HomReport(report)
    for f, (args, result) in sorted(sig.functions.items()):
        for point in N.product(args):
            if h.maps[result][N.functions[f][point]] != M.functions[f][h.apply(args, point)]:
                report.add("hom-function", f, render(point))
    for r, args in sorted(sig.relations.items()):
        for t in sorted_tuples(N.relations.get(r, ())):
            if h.apply(args, t) not in M.relations.get(r, ()):
                report.add("hom-relation", r, render(t))
    result = HomReport(report)
    for name, phi in sorted((formulas or {}).items()):
        image = eval_formula(M, phi)
        result.naturality[name] = all(h.apply(phi.sorts, t) in image for t in eval_formula(N, phi))
    return result


def _function_tables(sig: Signature, carriers: Mapping[str, Tuple]) -> Iterator[Dict[str, Dict]]:
    symbols = sorted(sig.functions)
    options = []
    for f in symbols:
        args, result = sig.functions[f]
        points = list(itertools.product(*[carriers[s] for s in args]))
        options.append([dict(zip(points, values))
                        for values in itertools.product(carriers[result], repeat=len(points))])
    for choice in itertools.product(*options):
        yield dict(zip(symbols, choice))


def _relation_tables(sig: Signature, carriers: Mapping[str, Tuple]) -> Iterator[Dict[str, FrozenSet]]:
    symbols = sorted(sig.relations)
    options = []
    for r in symbols:
        tuples = list(itertools.product(*[carriers[s] for s in sig.relations[r]]))
        options.append([frozenset(t for t, keep in zip(tuples, mask) if keep)
                        for mask in itertools.product([False, True], repeat=len(tuples))])
    for choice in itertools.product(*options):
        yield dict(zip(symbols, choice))


def enumerate_structures(theory: CoherentTheory, bound: int) -> List[FinStructure]:
    """Every model of theory whose carriers are ranges of size at most bound"""
    sig = theory.signature
    models = []
    for sizes in itertools.product(range(bound + 1), repeat=len(sig.sorts)):
        carriers = {s: tuple(range(n)) for s, n in zip(sig.sorts, sizes)}
        for functions in _function_tables(sig, carriers):
            for relations in _relation_tables(sig, carriers):
                M = FinStructure(sig, carriers, functions, relations, f"{theory.name}#{len(models)}")
                if check_model(M, theory).valid:
                    models.append(M)
    logger.debug(f"Enumerated {len(models)} models of {theory.name} with carriers <= {bound}")
    return models
