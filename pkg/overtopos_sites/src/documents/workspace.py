"""Reading workspace documents into categories, bases, theories, structures and sites"""
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Hashable, Iterable, List, Mapping, Optional, Tuple

from overtopos_sites.config.report_config import FORMAT_VERSION
from overtopos_sites.src.categories.constructions import cospan_diagram, empty_diagram
from overtopos_sites.src.categories.fincat import (
    FinCategory,
    FinFunctor,
    SetValuedFunctor,
    poset_category,
    sort_key,
    validate_category,
)
from overtopos_sites.src.errors import DocumentError, PreconditionError, UnresolvedReference
from overtopos_sites.src.fibrations.grothendieck import IndexedCategory, identity_transitions
from overtopos_sites.src.logic.fragment import FragmentArrow, FragmentSite, compile_fragment
from overtopos_sites.src.logic.semantics import FinStructure, ModelHom
from overtopos_sites.src.logic.syntax import (
    CoherentTheory,
    Sequent,
    Signature,
    format_formula,
    parse_formula,
    parse_in_context,
)
from overtopos_sites.src.overtopos.sites import PresheafModel
from overtopos_sites.src.sheaves.presheaves import FinPresheaf
from overtopos_sites.src.topologies.coverage import CoverageBasis, frame_basis, saturate_basis, trivial_basis

logger = logging.getLogger(__name__)

SECTIONS = (
    "categories", "functors", "set-functors", "presheaves", "diagrams", "bases", "theories",
    "structures", "homs", "fragments", "indexed-categories", "lifted", "presheaf-models",
)


def element(value) -> Hashable:
    """JSON values as hashable elements: lists become tuples"""
    if isinstance(value, list):
        return tuple(element(v) for v in value)
    if isinstance(value, dict):
        raise DocumentError("elements must be strings, numbers or lists")
    return value


def plain(value):
    """The inverse of element for writing documents"""
    if isinstance(value, tuple):
        return [plain(v) for v in value]
    return value


@dataclass(frozen=True)
class DiagramEntry:
    """A named diagram in a category, for the limits command"""
    name: str
    category: str
    diagram: FinFunctor


@dataclass(frozen=True)
class IndexedEntry:
    indexed: IndexedCategory
    basis: Optional[str] = None


@dataclass(frozen=True)
class LiftedEntry:
    functor: str
    source_basis: str
    target_basis: str


@dataclass
class Workspace:
    """Every section of one or more documents, resolved and built"""
    sources: List[str] = field(default_factory=list)
    raw: Dict[str, Dict[str, dict]] = field(default_factory=lambda: {s: {} for s in SECTIONS})
    categories: Dict[str, FinCategory] = field(default_factory=dict)
    functors: Dict[str, FinFunctor] = field(default_factory=dict)
    set_functors: Dict[str, SetValuedFunctor] = field(default_factory=dict)
    presheaves: Dict[str, FinPresheaf] = field(default_factory=dict)
    presheaf_bases: Dict[str, str] = field(default_factory=dict)
    diagrams: Dict[str, DiagramEntry] = field(default_factory=dict)
    bases: Dict[str, CoverageBasis] = field(default_factory=dict)
    theories: Dict[str, CoherentTheory] = field(default_factory=dict)
    structures: Dict[str, FinStructure] = field(default_factory=dict)
    structure_theories: Dict[str, str] = field(default_factory=dict)
    homs: Dict[str, ModelHom] = field(default_factory=dict)
    fragments: Dict[str, FragmentSite] = field(default_factory=dict)
    indexed: Dict[str, IndexedEntry] = field(default_factory=dict)
    lifted: Dict[str, LiftedEntry] = field(default_factory=dict)
    presheaf_models: Dict[str, PresheafModel] = field(default_factory=dict)

    def select(self, section: str, name: Optional[str] = None) -> List[str]:
        """Entry names of a section in sorted order, or just name when it is present"""
        table = self._table(section)
        if name is None:
            return sorted(table)
        return [name] if name in table else []

    def _table(self, section: str) -> Mapping:
        return {
            "categories": self.categories, "functors": self.functors, "set-functors": self.set_functors,
            "presheaves": self.presheaves, "diagrams": self.diagrams, "bases": self.bases,
            "theories": self.theories, "structures": self.structures, "homs": self.homs,
            "fragments": self.fragments, "indexed-categories": self.indexed, "lifted": self.lifted,
            "presheaf-models": self.presheaf_models,
        }[section]


def _ref(table: Mapping, section: str, name, referrer: str):
    if not isinstance(name, str) or name not in table:
        raise UnresolvedReference(section, str(name), referrer)
    return table[name]


def _require(entry: dict, key: str, where: str):
    if key not in entry:
        raise DocumentError(f"{where} is missing '{key}'")
    return entry[key]


def _pairs(value, where: str) -> Dict[Hashable, Hashable]:
    """A function given as a list of [x, y] pairs"""
    table = {}
    for pair in value or []:
        if not isinstance(pair, list) or len(pair) != 2:
            raise DocumentError(f"{where}: expected [input, output] pairs")
        table[element(pair[0])] = element(pair[1])
    return table


def load_documents(paths: Iterable[str]) -> Dict[str, Dict[str, dict]]:
    """Parse and merge documents; names must be unique within each section"""
    merged: Dict[str, Dict[str, dict]] = {s: {} for s in SECTIONS}
    for path in paths:
        source = str(path)
        try:
            text = Path(path).read_text()
        except OSError as e:
            raise DocumentError(f"cannot read document: {e.strerror}", source)
        try:
            document = json.loads(text)
        except json.JSONDecodeError as e:
            raise DocumentError(e.msg, source, e.lineno, e.colno)
        if not isinstance(document, dict):
            raise DocumentError("a document must be an object", source)
        version = document.get("format-version")
        if version != FORMAT_VERSION:
            raise DocumentError(f"unsupported format-version {version!r}", source)
        for key, section in document.items():
            if key == "format-version":
                continue
            if key not in SECTIONS:
                raise DocumentError(f"unknown section '{key}'", source)
            if not isinstance(section, dict):
                raise DocumentError(f"section '{key}' must map names to entries", source)
            for name, entry in section.items():
                if name in merged[key]:
                    raise DocumentError(f"{key} entry '{name}' is defined twice", source)
                if not isinstance(entry, dict):
                    raise DocumentError(f"{key} entry '{name}' must be an object", source)
                merged[key][name] = dict(entry, __source__=source)
        logger.debug(f"Loaded {source}")
    return merged


def _leq_closure(elements: List[str], pairs: Iterable[Tuple[str, str]]):
    reach = {x: {x} for x in elements}
    for x, y in pairs:
        reach[x].add(y)
    changed = True
    while changed:
        changed = False
        for x in elements:
            extended = set().union(*(reach[y] for y in reach[x]))
            if extended != reach[x]:
                reach[x] = extended
                changed = True
    return lambda x, y: y in reach[x]


def poset_join(cat: FinCategory):
    """Least upper bounds in a poset category, by exhaustive search"""
    def join(items) -> Optional[str]:
        items = list(items)
        bounds = [u for u in cat.objects if all(cat.hom(x, u) for x in items)]
        least = [u for u in bounds if all(cat.hom(u, v) for v in bounds)]
        return least[0] if least else None
    return join


def build_category(name: str, entry: dict) -> FinCategory:
    where = f"category '{name}'"
    if "poset" in entry:
        spec = entry["poset"]
        elements = [str(x) for x in _require(spec, "elements", where)]
        pairs = [(str(x), str(y)) for x, y in spec.get("leq", [])]
        if any(x not in elements or y not in elements for x, y in pairs):
            raise DocumentError(f"{where}: leq mentions an unknown element", entry["__source__"])
        return poset_category(name, elements, _leq_closure(elements, pairs))
    objects = [str(x) for x in _require(entry, "objects", where)]
    arrows = {}
    for f, ends in entry.get("arrows", {}).items():
        if not isinstance(ends, list) or len(ends) != 2:
            raise DocumentError(f"{where}: arrow {f} needs [dom, cod]", entry["__source__"])
        arrows[f] = (ends[0], ends[1])
    compose = [tuple(triple) for triple in entry.get("compose", [])]
    if any(len(t) != 3 for t in compose):
        raise DocumentError(f"{where}: compositions are [g, f, g∘f] triples", entry["__source__"])
    return FinCategory.build(name, objects, arrows, compose, entry.get("identities"))


def build_theory(name: str, entry: dict) -> CoherentTheory:
    where = f"theory '{name}'"
    source = entry["__source__"]
    functions = {}
    for f, spec in entry.get("functions", {}).items():
        functions[f] = (tuple(spec.get("args", [])), _require(spec, "result", f"{where} function {f}"))
    relations = {r: tuple(args) for r, args in entry.get("relations", {}).items()}
    sig = Signature(tuple(_require(entry, "sorts", where)), functions, relations, name)
    problems = sig.validate()
    if problems:
        raise DocumentError(f"{where}: {problems[0]}", source)
    axioms = []
    for i, axiom in enumerate(entry.get("axioms", [])):
        label = f"{source} {where} axiom {i}"
        context = tuple(tuple(c) for c in axiom.get("context", []))
        scope = [v for v, _ in context]
        premise = parse_formula(axiom.get("premise", "top"), sig, scope, label)
        conclusion = parse_formula(_require(axiom, "conclusion", label), sig, scope, label)
        sequent = Sequent(context, premise, conclusion)
        try:
            sequent.check(sig)
        except PreconditionError as e:
            raise DocumentError(str(e), label)
        axioms.append(sequent)
    return CoherentTheory(name, sig, tuple(axioms))


def build_structure(name: str, entry: dict, theory: CoherentTheory) -> FinStructure:
    sig = theory.signature
    where = f"structure '{name}'"
    carriers = {s: [element(x) for x in values] for s, values in _require(entry, "carriers", where).items()}
    functions = {}
    for f, rows in entry.get("functions", {}).items():
        if f not in sig.functions:
            raise DocumentError(f"{where}: unknown function symbol {f}", entry["__source__"])
        arity = len(sig.functions[f][0])
        table = {}
        for row in rows:
            row = [element(v) for v in row]
            if len(row) != arity + 1:
                raise DocumentError(f"{where}: rows of {f} need {arity} arguments and a result", entry["__source__"])
            table[tuple(row[:-1])] = row[-1]
        functions[f] = table
    relations = {}
    for r, rows in entry.get("relations", {}).items():
        if r not in sig.relations:
            raise DocumentError(f"{where}: unknown relation symbol {r}", entry["__source__"])
        relations[r] = [tuple(element(v) for v in row) for row in rows]
    return FinStructure.build(sig, carriers, functions, relations, name)


def build_functor(name: str, entry: dict, categories: Mapping[str, FinCategory]) -> FinFunctor:
    where = f"functor '{name}'"
    source = _ref(categories, "categories", _require(entry, "source", where), where)
    target = _ref(categories, "categories", _require(entry, "target", where), where)
    on_objects = dict(_require(entry, "objects", where))
    on_arrows = dict(entry.get("arrows", {}))
    for x, ident in source.identities.items():
        if x in on_objects and on_objects[x] in target.identities:
            on_arrows.setdefault(ident, target.identity(on_objects[x]))
    return FinFunctor(source, target, on_objects, on_arrows, name)


def _actions(cat: FinCategory, carriers: Mapping[str, List], actions: Mapping[str, list]) -> Dict[str, Dict]:
    table = {f: _pairs(rows, f"action of {f}") for f, rows in actions.items()}
    for x, ident in cat.identities.items():
        table.setdefault(ident, {v: v for v in carriers.get(x, [])})
    return table


def build_fragment(name: str, entry: dict, ws: Workspace) -> FragmentSite:
    where = f"fragment '{name}'"
    source = entry["__source__"]
    theory = _ref(ws.theories, "theories", _require(entry, "theory", where), where)
    model = _ref(ws.structures, "structures", _require(entry, "model", where), where)
    sig = theory.signature
    formulas = {}
    for phi, spec in _require(entry, "formulas", where).items():
        formulas[phi] = parse_in_context(spec.get("context", []), spec.get("body", "top"), sig,
                                         f"{source} {where} formula {phi}")
    arrows = []
    for arrow_name, spec in entry.get("arrows", {}).items():
        label = f"{source} {where} arrow {arrow_name}"
        dom = _ref(formulas, "formulas", _require(spec, "dom", label), label)
        cod = _ref(formulas, "formulas", _require(spec, "cod", label), label)
        if "context" in spec:
            context = spec["context"]
        else:
            context = list(dom.context) + list(cod.context)
            if len({v for v, _ in context}) != len(context):
                raise DocumentError(f"{arrow_name}: domain and codomain share variable names; give a context",
                                    label)
        theta = parse_in_context(context, _require(spec, "theta", label), sig, label)
        arrows.append(FragmentArrow(arrow_name, spec["dom"], spec["cod"], theta))
    covers = [(_require(c, "target", where), list(c.get("arrows", []))) for c in entry.get("covers", [])]
    witnesses = [_ref(ws.structures, "structures", w, where) for w in entry.get("witnesses", [])]
    return compile_fragment(theory, model, formulas, arrows, covers, witnesses, name,
                            entry.get("companion-bound"))


def build_workspace(paths: Iterable[str]) -> Workspace:
    """Load documents and build every entry in dependency order"""
    paths = [str(p) for p in paths]
    raw = load_documents(paths)
    ws = Workspace(paths, raw)

    # Step 1: categories and what lives on them
    for name, entry in sorted(raw["categories"].items()):
        ws.categories[name] = build_category(name, entry)
    for name, entry in sorted(raw["functors"].items()):
        ws.functors[name] = build_functor(name, entry, ws.categories)
    for name, entry in sorted(raw["set-functors"].items()):
        where = f"set-functor '{name}'"
        cat = _ref(ws.categories, "categories", _require(entry, "category", where), where)
        carriers = {x: [element(v) for v in values] for x, values in _require(entry, "carriers", where).items()}
        ws.set_functors[name] = SetValuedFunctor.build(cat, carriers,
                                                       _actions(cat, carriers, entry.get("actions", {})), name)
    for name, entry in sorted(raw["presheaves"].items()):
        where = f"presheaf '{name}'"
        cat = _ref(ws.categories, "categories", _require(entry, "category", where), where)
        sections = {x: [element(v) for v in values] for x, values in _require(entry, "sections", where).items()}
        ws.presheaves[name] = FinPresheaf.build(cat, sections,
                                                _actions(cat, sections, entry.get("restrictions", {})), name)
    for name, entry in sorted(raw["diagrams"].items()):
        where = f"diagram '{name}'"
        cat_name = _require(entry, "category", where)
        cat = _ref(ws.categories, "categories", cat_name, where)
        shape = entry.get("shape", "cospan")
        if shape == "empty":
            diagram = empty_diagram(cat)
        elif shape == "cospan":
            f, g = _require(entry, "arrows", where)
            for arrow in (f, g):
                _ref(cat.arrows, "arrows", arrow, where)
            diagram = cospan_diagram(cat, f, g)
        else:
            raise DocumentError(f"{where}: unknown shape '{shape}'", entry["__source__"])
        ws.diagrams[name] = DiagramEntry(name, cat_name, diagram)
    for name, entry in sorted(raw["bases"].items()):
        where = f"basis '{name}'"
        cat = _ref(ws.categories, "categories", _require(entry, "category", where), where)
        kind = entry.get("kind", "families")
        if kind == "trivial":
            ws.bases[name] = trivial_basis(cat, name)
        elif kind == "frame":
            ws.bases[name] = frame_basis(cat, poset_join(cat), name)
        elif kind in ("families", "generators"):
            families = {x: [list(arrows) for arrows in fams] for x, fams in entry.get("families", {}).items()}
            unknown = [x for x in families if x not in cat.objects]
            if unknown:
                raise UnresolvedReference("objects", unknown[0], where)
            if kind == "generators":
                ws.bases[name] = saturate_basis(cat, CoverageBasis.build(cat, families).families, name)
            else:
                ws.bases[name] = CoverageBasis.build(cat, families, name)
        else:
            raise DocumentError(f"{where}: unknown kind '{kind}'", entry["__source__"])
    for name, entry in sorted(raw["presheaves"].items()):
        if "basis" in entry:
            _ref(ws.bases, "bases", entry["basis"], f"presheaf '{name}'")
            ws.presheaf_bases[name] = entry["basis"]

    # Step 2: theories, structures and homomorphisms
    for name, entry in sorted(raw["theories"].items()):
        ws.theories[name] = build_theory(name, entry)
    for name, entry in sorted(raw["structures"].items()):
        where = f"structure '{name}'"
        theory_name = _require(entry, "theory", where)
        ws.structures[name] = build_structure(name, entry, _ref(ws.theories, "theories", theory_name, where))
        ws.structure_theories[name] = theory_name
    for name, entry in sorted(raw["homs"].items()):
        where = f"hom '{name}'"
        N = _ref(ws.structures, "structures", _require(entry, "source", where), where)
        M = _ref(ws.structures, "structures", _require(entry, "target", where), where)
        maps = {s: _pairs(rows, f"{where} sort {s}") for s, rows in _require(entry, "maps", where).items()}
        ws.homs[name] = ModelHom(N, M, maps, name)

    # Step 3: fragments, indexed categories and the constructions built on them
    for name, entry in sorted(raw["fragments"].items()):
        ws.fragments[name] = build_fragment(name, entry, ws)
    for name, entry in sorted(raw["indexed-categories"].items()):
        where = f"indexed category '{name}'"
        base = _ref(ws.categories, "categories", _require(entry, "base", where), where)
        fibers = {c: _ref(ws.categories, "categories", f, where) for c, f in _require(entry, "fibers", where).items()}
        missing = [c for c in base.objects if c not in fibers]
        if missing:
            raise DocumentError(f"{where}: no fiber for {missing[0]}", entry["__source__"])
        transitions = {u: _ref(ws.functors, "functors", F, where) for u, F in entry.get("transitions", {}).items()}
        basis = entry.get("basis")
        if basis is not None:
            _ref(ws.bases, "bases", basis, where)
        ws.indexed[name] = IndexedEntry(
            IndexedCategory(base, fibers, identity_transitions(base, fibers, transitions), name), basis)
    for name, entry in sorted(raw["lifted"].items()):
        where = f"lifted '{name}'"
        ws.lifted[name] = LiftedEntry(_require(entry, "functor", where), _require(entry, "source-basis", where),
                                      _require(entry, "target-basis", where))
        _ref(ws.functors, "functors", ws.lifted[name].functor, where)
        _ref(ws.bases, "bases", ws.lifted[name].source_basis, where)
        _ref(ws.bases, "bases", ws.lifted[name].target_basis, where)
    for name, entry in sorted(raw["presheaf-models"].items()):
        where = f"presheaf model '{name}'"
        frag = _ref(ws.fragments, "fragments", _require(entry, "fragment", where), where)
        site = _ref(ws.categories, "categories", _require(entry, "site", where), where)
        topology = _ref(ws.bases, "bases", _require(entry, "topology", where), where)
        if "structures" not in entry:
            ws.presheaf_models[name] = PresheafModel.constant(site, topology, frag, name=name)
            continue
        structures = {c: _ref(ws.structures, "structures", s, where) for c, s in entry["structures"].items()}
        homs = {u: _ref(ws.homs, "homs", h, where) for u, h in entry.get("homs", {}).items()}
        for c, ident in site.identities.items():
            if c in structures:
                homs.setdefault(ident, ModelHom.identity(structures[c]))
        ws.presheaf_models[name] = PresheafModel(site, topology, frag, structures, homs, name)

    logger.info(f"Workspace from {len(paths)} documents: "
                + ", ".join(f"{len(raw[s])} {s}" for s in SECTIONS if raw[s]))
    return ws


def category_problems(ws: Workspace) -> Dict[str, List[str]]:
    """Category-law violations per category, for commands that need valid categories"""
    problems = {}
    for name, cat in sorted(ws.categories.items()):
        report = validate_category(cat)
        if not report.valid:
            problems[name] = [v.describe() for v in report.violations]
    return problems


def theory_document(theory: CoherentTheory) -> dict:
    """A theories-section entry for a theory"""
    sig = theory.signature
    return {
        "sorts": list(sig.sorts),
        "functions": {f: {"args": list(args), "result": result} for f, (args, result) in sorted(sig.functions.items())},
        "relations": {r: list(args) for r, args in sorted(sig.relations.items())},
        "axioms": [{"context": [list(c) for c in a.context], "premise": format_formula(a.premise),
                    "conclusion": format_formula(a.conclusion)} for a in theory.axioms],
    }


def structure_document(M: FinStructure, theory: str) -> dict:
    """A structures-section entry for a structure"""
    sig = M.signature
    return {
        "theory": theory,
        "carriers": {s: [plain(x) for x in M.carrier(s)] for s in sig.sorts},
        "functions": {f: [[plain(v) for v in args] + [plain(value)] for args, value in sorted(
            M.functions[f].items(), key=lambda kv: sort_key(kv[0]))] for f in sorted(sig.functions)},
        "relations": {r: sorted([[plain(v) for v in t] for t in M.relations.get(r, ())], key=sort_key)
                      for r in sorted(sig.relations)},
    }
