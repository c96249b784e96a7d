"""The checker's commands: each reads a workspace and fills a report"""
import logging
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Tuple

from overtopos_sites.config.config import DEFAULT_BOUND, WITNESS_LIMIT
from overtopos_sites.config.report_config import EXIT_FAILURE, EXIT_INPUT_ERROR, FORMAT_VERSION
from overtopos_sites.src.categories.constructions import (
    category_of_elements,
    compute_limit,
    cospan_diagram,
    empty_diagram,
    isomorphic_objects,
)
from overtopos_sites.src.categories.fincat import render, validate_category, validate_functor
from overtopos_sites.src.documents.reports import Report, Section, write_document
from overtopos_sites.src.documents.workspace import (
    Workspace,
    build_workspace,
    category_problems,
    structure_document,
    theory_document,
)
from overtopos_sites.src.errors import LimitMissing, PointError, PreconditionError, SiteError
from overtopos_sites.src.fibrations.descent import check_descent
from overtopos_sites.src.fibrations.grothendieck import (
    grothendieck_construction,
    limit_in_total,
    terminal_lift_report,
    validate_indexed_category,
)
from overtopos_sites.src.logic.axioms import emit_tm_axioms, point_as_structure
from overtopos_sites.src.logic.semantics import check_hom, check_model, sequent_counterexample, validate_structure
from overtopos_sites.src.overtopos.points import check_correspondence, enumerate_points, hom_to_point
from overtopos_sites.src.overtopos.sites import (
    agrees_with_set_based,
    antecedent_basis,
    antecedent_basis_general,
    check_cartesian,
    element_stack,
    image_factorizations,
    validate_presheaf_model,
)
from overtopos_sites.src.sheaves.cartesian import cospans
from overtopos_sites.src.sheaves.presheaves import representable, sheaf_report, validate_presheaf
from overtopos_sites.src.topologies.coverage import check_basis
from overtopos_sites.src.topologies.lifted import giraud_basis, lifted_basis

logger = logging.getLogger(__name__)


@dataclass
class RunOptions:
    bound: int = DEFAULT_BOUND
    witness_limit: int = WITNESS_LIMIT
    strict: bool = False
    name: Optional[str] = None
    report: Optional[str] = None


def _basis_section(section: Section, cat, basis) -> bool:
    """Record the basis check; returns validity"""
    result = check_basis(cat, basis)
    section.value("families", basis.count())
    section.value("generating families", len(basis.generating_families()))
    section.value("instances checked", result.instances_checked)
    section.witnesses("violations", [v.describe() for v in result.violations])
    return result.valid


def _no_entries(report: Report, section: str, options: RunOptions) -> None:
    if options.name is not None:
        report.fail(f"no {section} entry named '{options.name}'")
    else:
        report.warn(f"the workspace has no {section} entries")


def cmd_validate(ws: Workspace, options: RunOptions, report: Report) -> None:
    """Check every entry of every section"""
    def wanted(name: str) -> bool:
        return options.name is None or name == options.name

    checked = 0
    for name, cat in sorted(ws.categories.items()):
        if wanted(name):
            checked += 1
            result = validate_category(cat)
            section = report.section(f"category {name}")
            section.value("objects", len(cat.objects))
            section.value("arrows", len(cat.arrows))
            section.witnesses("violations", [v.describe() for v in result.violations])
            if not result.valid:
                report.fail(f"category {name}: {result.violations[0].describe()}")
    problems = category_problems(ws)
    if problems:
        return
    for label, table in (("functor", ws.functors), ("set-functor", ws.set_functors)):
        for name, F in sorted(table.items()):
            if wanted(name):
                checked += 1
                result = validate_functor(F)
                report.section(f"{label} {name}").witnesses("violations", [v.describe() for v in result.violations])
                if not result.valid:
                    report.fail(f"{label} {name}: {result.violations[0].describe()}")
    for name, P in sorted(ws.presheaves.items()):
        if wanted(name):
            checked += 1
            result = validate_presheaf(P)
            report.section(f"presheaf {name}").witnesses("violations", [v.describe() for v in result.violations])
            if not result.valid:
                report.fail(f"presheaf {name}: {result.violations[0].describe()}")
    for name, B in sorted(ws.bases.items()):
        if wanted(name):
            checked += 1
            if not _basis_section(report.section(f"basis {name}"), B.category, B):
                report.fail(f"basis {name} violates a basis condition")
    for name, T in sorted(ws.theories.items()):
        if wanted(name):
            checked += 1
            section = report.section(f"theory {name}")
            section.value("sorts", len(T.signature.sorts))
            section.value("axioms", len(T.axioms))
    for name, M in sorted(ws.structures.items()):
        if wanted(name):
            checked += 1
            section = report.section(f"structure {name}")
            result = validate_structure(M)
            section.value("sizes", render(M.size_vector()))
            if not result.valid:
                section.witnesses("violations", [v.describe() for v in result.violations])
                report.fail(f"structure {name}: {result.violations[0].describe()}")
                continue
            theory = ws.theories[ws.structure_theories[name]]
            failing = []
            for i, axiom in enumerate(theory.axioms):
                counterexample = sequent_counterexample(M, axiom)
                if counterexample is not None:
                    failing.append(f"axiom {i} {axiom} at {render(counterexample)}")
            section.witnesses("failing axioms", failing)
            if failing:
                report.fail(f"structure {name} is not a model of {theory.name}: {failing[0]}")
    for name, h in sorted(ws.homs.items()):
        if wanted(name):
            checked += 1
            result = check_hom(h.source, h.target, h)
            report.section(f"hom {name}").witnesses("violations", [v.describe() for v in result.violations.violations])
            if not result.valid:
                report.fail(f"hom {name}: {result.violations.violations[0].describe()}")
    for name, frag in sorted(ws.fragments.items()):
        if wanted(name):
            checked += 1
            section = report.section(f"fragment {name}")
            section.value("formulas", len(frag.formulas))
            section.value("arrows", len(frag.category.arrows))
            section.value("designated squares", len(frag.squares))
            section.value("companions", len(frag.companions))
            if not _basis_section(section, frag.category, frag.basis):
                report.fail(f"fragment {name}: its basis violates a basis condition")
    for name, entry in sorted(ws.indexed.items()):
        if wanted(name):
            checked += 1
            result = validate_indexed_category(entry.indexed)
            report.section(f"indexed category {name}").witnesses(
                "violations", [v.describe() for v in result.violations])
            if not result.valid:
                report.fail(f"indexed category {name}: {result.violations[0].describe()}")
    for name, model in sorted(ws.presheaf_models.items()):
        if wanted(name):
            checked += 1
            result = validate_presheaf_model(model)
            report.section(f"presheaf model {name}").witnesses(
                "violations", [v.describe() for v in result.violations])
            if not result.valid:
                report.fail(f"presheaf model {name}: {result.violations[0].describe()}")
    if options.name is not None and not checked:
        report.fail(f"no entry named '{options.name}'")


def cmd_elements(ws: Workspace, options: RunOptions, report: Report) -> None:
    """The category of elements of each fragment's model and of each set-valued functor"""
    names = ws.select("fragments", options.name)
    functors = ws.select("set-functors", options.name)
    if not names and not functors:
        _no_entries(report, "fragments or set-functors", options)
    for name in names:
        frag = ws.fragments[name]
        el = category_of_elements(frag.interp, name=f"el({frag.model.name})")
        section = report.section(f"elements of fragment {name}")
        section.value("objects", len(el.category.objects))
        section.value("arrows", len(el.category.arrows))
        section.witnesses("element objects", list(el.category.objects))
    for name in functors:
        el = category_of_elements(ws.set_functors[name])
        section = report.section(f"elements of set-functor {name}")
        section.value("objects", len(el.category.objects))
        section.value("arrows", len(el.category.arrows))
        section.witnesses("element objects", list(el.category.objects))


def cmd_antecedent(ws: Workspace, options: RunOptions, report: Report) -> None:
    """Antecedent basis of every fragment, with basis, cartesian and image checks"""
    names = ws.select("fragments", options.name)
    if not names:
        _no_entries(report, "fragments", options)
    for name in names:
        over = antecedent_basis(ws.fragments[name])
        section = report.section(f"antecedent basis of {name}")
        section.value("element objects", len(over.elements.objects))
        section.value("element arrows", len(over.elements.arrows))
        if not _basis_section(section, over.elements, over.basis):
            report.fail(f"antecedent basis of {name} violates a basis condition")
        section.witnesses("generators", [str(R) for R in over.basis.generating_families()])
        cartesian = check_cartesian(over)
        section.value("designated cones", len(over.cones))
        section.witnesses("cone failures", [v.describe() for v in cartesian.violations])
        if not cartesian.valid:
            report.fail(f"{name}: a designated cone of the elements category is not a limit")
        factorizations = image_factorizations(over)
        section.witnesses("image factorizations", [
            f"{f.arrow}: {f.status}" + (f" through {f.image}" if f.image else "") for f in factorizations])
        if any(f.status == "not-factored" for f in factorizations):
            report.fail(f"{name}: an arrow does not factor through its listed image")
        skipped = sum(1 for f in factorizations if f.status == "skipped")
        if skipped:
            report.warn(f"{name}: {skipped} arrows have no listed image formula")
        for note in over.notes:
            report.warn(f"{name}: {note}")


def cmd_antecedent_general(ws: Workspace, options: RunOptions, report: Report) -> None:
    """Antecedent basis on the total category of each presheaf model's element stack"""
    names = ws.select("presheaf-models", options.name)
    if not names:
        _no_entries(report, "presheaf-models", options)
    for name in names:
        model = ws.presheaf_models[name]
        section = report.section(f"general antecedent basis of {name}")
        valid = validate_presheaf_model(model)
        if not valid.valid:
            section.witnesses("model violations", [v.describe() for v in valid.violations])
            report.fail(f"presheaf model {name}: {valid.violations[0].describe()}")
            continue
        over = antecedent_basis_general(model)
        section.value("total objects", len(over.elements.objects))
        section.value("total arrows", len(over.elements.arrows))
        if not _basis_section(section, over.elements, over.basis):
            report.fail(f"general antecedent basis of {name} violates a basis condition")
        for note in over.notes:
            report.warn(f"{name}: {note}")
        site = model.site
        if len(site.objects) == 1 and len(site.arrows) == 1:
            structure = model.structures[site.objects[0]]
            frag = model.fragment
            set_over = antecedent_basis(frag if structure is frag.model else frag.reinterpret(structure))
            agrees = agrees_with_set_based(over, set_over)
            section.value("agrees with set-based basis", agrees)
            if not agrees:
                report.fail(f"{name}: the general basis over the point differs from the set-based basis")


def cmd_lifted(ws: Workspace, options: RunOptions, report: Report) -> None:
    names = ws.select("lifted", options.name)
    if not names:
        _no_entries(report, "lifted", options)
    for name in names:
        entry = ws.lifted[name]
        fstar = ws.functors[entry.functor]
        site = lifted_basis(fstar, ws.bases[entry.source_basis], ws.bases[entry.target_basis], name)
        section = report.section(f"lifted basis {name}")
        section.value("comma objects", len(site.comma.category.objects))
        section.value("comma arrows", len(site.comma.category.arrows))
        if not _basis_section(section, site.comma.category, site.basis):
            report.fail(f"lifted basis {name} violates a basis condition")


def cmd_giraud(ws: Workspace, options: RunOptions, report: Report) -> None:
    names = [n for n in ws.select("indexed-categories", options.name) if ws.indexed[n].basis]
    if not names:
        _no_entries(report, "indexed-categories with a basis", options)
    for name in names:
        entry = ws.indexed[name]
        valid = validate_indexed_category(entry.indexed)
        if not valid.valid:
            report.fail(f"indexed category {name}: {valid.violations[0].describe()}")
            continue
        total = grothendieck_construction(entry.indexed)
        basis = giraud_basis(total, ws.bases[entry.basis], f"giraud({name})")
        section = report.section(f"Giraud basis of {name}")
        section.value("total objects", len(total.category.objects))
        section.value("total arrows", len(total.category.arrows))
        if not _basis_section(section, total.category, basis):
            report.fail(f"Giraud basis of {name} violates a basis condition")


def cmd_tm(ws: Workspace, options: RunOptions, report: Report) -> Dict:
    """Emit the theory of homomorphisms into each fragment's model and test it on the workspace's homs"""
    names = ws.select("fragments", options.name)
    if not names:
        _no_entries(report, "fragments", options)
    document: Dict = {"format-version": FORMAT_VERSION, "theories": {}, "structures": {}}
    for name in names:
        frag = ws.fragments[name]
        theory = emit_tm_axioms(frag)
        theory_name = f"T_{name}"
        document["theories"][theory_name] = theory_document(theory)
        section = report.section(f"theory of homs into {frag.model.name} ({name})")
        section.value("sorts", len(theory.signature.sorts))
        section.value("function symbols", len(theory.signature.functions))
        section.witnesses("axioms", [str(a) for a in theory.axioms])
        over = antecedent_basis(frag)
        for hom_name in sorted(ws.homs):
            h = ws.homs[hom_name]
            if h.target is not frag.model:
                continue
            try:
                point = hom_to_point(over, h.source, h)
            except (PointError, PreconditionError) as e:
                report.warn(f"{name}: hom {hom_name} skipped: {e}")
                continue
            S = point_as_structure(theory.signature, point.functor, f"S_{hom_name}")
            document["structures"][f"S_{name}_{hom_name}"] = structure_document(S, theory_name)
            result = check_model(S, theory)
            section.witnesses(f"axioms failing at {hom_name}", [v.describe() for v in result.violations])
            if not result.valid:
                report.fail(f"{name}: the structure of {hom_name} violates {result.violations[0].describe()}")
    return document


def cmd_points(ws: Workspace, options: RunOptions, report: Report) -> None:
    names = ws.select("fragments", options.name)
    if not names:
        _no_entries(report, "fragments", options)
    for name in names:
        over = antecedent_basis(ws.fragments[name])
        points = enumerate_points(over, options.bound)
        section = report.section(f"points of {name} with carriers <= {options.bound}")
        section.value("point classes", len(points))
        section.witnesses("size vectors", [render(P.functor.size_vector()) for P in points])


def cmd_correspondence(ws: Workspace, options: RunOptions, report: Report) -> None:
    """Count points and homs at the bound and run both round trips"""
    names = ws.select("fragments", options.name)
    if not names:
        _no_entries(report, "fragments", options)
    for name in names:
        over = antecedent_basis(ws.fragments[name])
        result = check_correspondence(over, options.bound)
        section = report.section(f"correspondence for {name} at bound {options.bound}")
        section.value("point classes", result.points)
        section.value("hom classes", result.homs)
        section.witnesses("round-trip failures", result.failures)
        if result.points != result.homs:
            report.fail(f"{name}: {result.points} point classes but {result.homs} hom classes")
        if result.failures:
            report.fail(f"{name}: {result.failures[0]}")


def cmd_sheaf(ws: Workspace, options: RunOptions, report: Report) -> None:
    """Sheaf condition for workspace presheaves, and subcanonicity of antecedent bases"""
    presheaves = ws.select("presheaves", options.name)
    fragments = ws.select("fragments", options.name)
    if not presheaves and not fragments:
        _no_entries(report, "presheaves or fragments", options)
    for name in presheaves:
        P = ws.presheaves[name]
        bases = [ws.presheaf_bases[name]] if name in ws.presheaf_bases else \
            sorted(b for b, B in ws.bases.items() if B.category is P.category)
        for basis_name in bases:
            result = sheaf_report(P, ws.bases[basis_name])
            section = report.section(f"presheaf {name} on {basis_name}")
            section.value("matching families", result.families_checked)
            section.witnesses("failures", result.describe(options.witness_limit))
            if not result.valid:
                report.fail(f"{name} is not a sheaf for {basis_name}")
    for name in fragments:
        over = antecedent_basis(ws.fragments[name])
        failing = []
        for x in over.elements.objects:
            if not sheaf_report(representable(over.elements, x), over.basis).valid:
                failing.append(x)
        section = report.section(f"representables on the elements of {name}")
        section.value("representables", len(over.elements.objects))
        section.witnesses("not sheaves", failing)
        if failing:
            report.fail(f"{name}: the representable at {failing[0]} is not a sheaf for the antecedent basis")


def cmd_descent(ws: Workspace, options: RunOptions, report: Report) -> None:
    """Descent along the basis families of indexed categories and of element stacks"""
    indexed = [n for n in ws.select("indexed-categories", options.name) if ws.indexed[n].basis]
    models = ws.select("presheaf-models", options.name)
    if not indexed and not models:
        _no_entries(report, "indexed-categories with a basis or presheaf-models", options)
    work = [(f"indexed category {n}", ws.indexed[n].indexed, ws.bases[ws.indexed[n].basis]) for n in indexed]
    work += [(f"element stack of {n}", element_stack(ws.presheaf_models[n]).indexed,
              ws.presheaf_models[n].topology) for n in models]
    for label, I, basis in work:
        valid = validate_indexed_category(I)
        if not valid.valid:
            report.fail(f"{label}: {valid.violations[0].describe()}")
            continue
        section = report.section(f"descent for {label}")
        data, failing = 0, []
        for R in basis.generating_families():
            result = check_descent(I, R)
            data += result.data_checked
            failing.extend(f"{R}: {datum.describe()} ({reason})" for datum, reason in result.failures)
        section.value("families", len(basis.generating_families()))
        section.value("descent data", data)
        section.witnesses("failures", failing)
        if failing:
            report.fail(f"{label}: {failing[0]}")


def cmd_limits(ws: Workspace, options: RunOptions, report: Report) -> None:
    """Limits of named diagrams, and limits in Grothendieck totals built fiberwise"""
    diagrams = ws.select("diagrams", options.name)
    indexed = ws.select("indexed-categories", options.name)
    if not diagrams and not indexed:
        _no_entries(report, "diagrams or indexed-categories", options)
    for name in diagrams:
        entry = ws.diagrams[name]
        section = report.section(f"limit of {name} in {entry.category}")
        witness = compute_limit(ws.categories[entry.category], entry.diagram)
        if witness is None:
            section.line("limit: none")
            continue
        section.value("apex", witness.apex)
        section.witnesses("legs", [f"{i}: {leg}" for i, leg in witness.legs])
    for name in indexed:
        I = ws.indexed[name].indexed
        valid = validate_indexed_category(I)
        if not valid.valid:
            report.fail(f"indexed category {name}: {valid.violations[0].describe()}")
            continue
        total = grothendieck_construction(I)
        cat = total.category
        section = report.section(f"limits in the total category of {name}")
        try:
            lifts = terminal_lift_report(I, total)
        except LimitMissing as e:
            report.warn(f"{name}: {e}")
        else:
            section.witnesses("terminal-lift failures", [v.describe() for v in lifts.violations])
            if not lifts.valid:
                report.fail(f"{name}: {lifts.violations[0].describe()}")
        mismatches, assembled = [], 0
        diagrams_in_total = [empty_diagram(cat)] + [cospan_diagram(cat, f, g) for f, g in cospans(cat)]
        for diagram in diagrams_in_total:
            direct = compute_limit(cat, diagram)
            try:
                built = limit_in_total(total, diagram)
            except LimitMissing:
                built = None
            except PreconditionError as e:
                mismatches.append(f"{diagram.name}: {e}")
                continue
            if built is not None:
                assembled += 1
            if (direct is None) != (built is None):
                mismatches.append(f"{diagram.name}: direct limit {'absent' if direct is None else direct.apex}, "
                                  f"fiberwise limit {'absent' if built is None else built.apex}")
            elif direct is not None and isomorphic_objects(cat, direct.apex, built.apex) is None:
                mismatches.append(f"{diagram.name}: {direct.apex} and {built.apex} are not isomorphic")
        section.value("diagrams", len(diagrams_in_total))
        section.value("fiberwise limits", assembled)
        section.witnesses("mismatches", mismatches)
        if mismatches:
            report.fail(f"{name}: {mismatches[0]}")


COMMANDS: Dict[str, Callable[[Workspace, RunOptions, Report], Optional[Dict]]] = {
    "validate": cmd_validate,
    "elements": cmd_elements,
    "antecedent": cmd_antecedent,
    "antecedent-general": cmd_antecedent_general,
    "lifted": cmd_lifted,
    "giraud": cmd_giraud,
    "tm": cmd_tm,
    "points": cmd_points,
    "correspondence": cmd_correspondence,
    "sheaf": cmd_sheaf,
    "descent": cmd_descent,
    "limits": cmd_limits,
}


def run(command: str, paths: List[str], options: Optional[RunOptions] = None) -> Tuple[int, str]:
    """Run one command; returns the exit status and the text report"""
    options = options or RunOptions()
    report = Report(command, options.witness_limit)
    try:
        ws = build_workspace(paths)
        problems = category_problems(ws)
        if problems and command != "validate":
            name, violations = sorted(problems.items())[0]
            raise PreconditionError("category-laws", f"category {name}: {violations[0]}")
        document = COMMANDS[command](ws, options, report)
    except PointError as e:
        logger.error(f"{command} failed: {e}")
        report.fail(str(e))
        return EXIT_FAILURE, report.render_text(options.strict)
    except SiteError as e:
        logger.error(f"{command} could not run: {e}")
        return EXIT_INPUT_ERROR, f"error: {e}\n"
    if options.report and document is not None:
        write_document(options.report, document)
    elif options.report:
        report.write_json(options.report, options.strict)
    return report.exit_status(options.strict), report.render_text(options.strict)
