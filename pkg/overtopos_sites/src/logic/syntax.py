"""Coherent formulas, sequents and theories, with a prefix-syntax reader and printer

Formulas are written as s-expressions:

    top | bot | (eq t u) | (R t ...) | (and f ...) | (or f ...) | (exists ((z A) ...) f)

where a term is a variable, a constant, or (f t ...).
"""
import itertools
import logging
from dataclasses import dataclass
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Set, Tuple, Union

from overtopos_sites.src.errors import DocumentError, PreconditionError

logger = logging.getLogger(__name__)

Context = Tuple[Tuple[str, str], ...]


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class App:
    symbol: str
    args: Tuple["Term", ...] = ()


Term = Union[Var, App]


@dataclass(frozen=True)
class Top:
    pass


@dataclass(frozen=True)
class Bot:
    pass


@dataclass(frozen=True)
class Eq:
    left: Term
    right: Term


@dataclass(frozen=True)
class Rel:
    symbol: str
    args: Tuple[Term, ...] = ()


@dataclass(frozen=True)
class And:
    parts: Tuple["Formula", ...]


@dataclass(frozen=True)
class Or:
    parts: Tuple["Formula", ...]


@dataclass(frozen=True)
class Exists:
    variables: Context
    body: "Formula"


Formula = Union[Top, Bot, Eq, Rel, And, Or, Exists]

TOP = Top()
BOT = Bot()


def var(name: str) -> Var:
    return Var(name)


def eq(left: Union[str, Term], right: Union[str, Term]) -> Eq:
    return Eq(Var(left) if isinstance(left, str) else left, Var(right) if isinstance(right, str) else right)


def conj(*parts: Formula) -> Formula:
    return And(tuple(parts)) if len(parts) != 1 else parts[0]


def disj(*parts: Formula) -> Formula:
    return Or(tuple(parts)) if len(parts) != 1 else parts[0]


def exists(variables: Iterable[Tuple[str, str]], body: Formula) -> Formula:
    variables = tuple(variables)
    return Exists(variables, body) if variables else body


def tuple_eq(left: Sequence[str], right: Sequence[str]) -> Formula:
    """The conjunction of componentwise equations between two variable lists"""
    return conj(*[eq(a, b) for a, b in zip(left, right)]) if left else TOP


@dataclass(frozen=True)
class Signature:
    """Sorts, function symbols (argument sorts, result sort) and relation symbols"""
    sorts: Tuple[str, ...]
    functions: Mapping[str, Tuple[Tuple[str, ...], str]]
    relations: Mapping[str, Tuple[str, ...]]
    name: str = ""

    def __hash__(self) -> int:
        return hash((self.sorts, tuple(sorted(self.functions.items())), tuple(sorted(self.relations.items()))))

    def __eq__(self, other) -> bool:
        return isinstance(other, Signature) and self.sorts == other.sorts and \
            dict(self.functions) == dict(other.functions) and dict(self.relations) == dict(other.relations)

    def validate(self) -> List[str]:
        problems = []
        known = set(self.sorts)
        for f, (args, result) in sorted(self.functions.items()):
            if any(s not in known for s in args + (result,)):
                problems.append(f"function {f} uses an undeclared sort")
        for r, args in sorted(self.relations.items()):
            if any(s not in known for s in args):
                problems.append(f"relation {r} uses an undeclared sort")
        if set(self.functions) & set(self.relations):
            problems.append("function and relation symbols overlap")
        return problems


# ---------------------------------------------------------------------------
# Traversals

def term_vars(term: Term) -> Set[str]:
    if isinstance(term, Var):
        return {term.name}
    return set().union(*[term_vars(a) for a in term.args]) if term.args else set()


def free_vars(formula: Formula) -> Set[str]:
    if isinstance(formula, (Top, Bot)):
        return set()
    if isinstance(formula, Eq):
        return term_vars(formula.left) | term_vars(formula.right)
    if isinstance(formula, Rel):
        return set().union(*[term_vars(a) for a in formula.args]) if formula.args else set()
    if isinstance(formula, (And, Or)):
        return set().union(*[free_vars(p) for p in formula.parts]) if formula.parts else set()
    bound = {v for v, _ in formula.variables}
    return free_vars(formula.body) - bound


def _subst_term(term: Term, mapping: Mapping[str, Term]) -> Term:
    if isinstance(term, Var):
        return mapping.get(term.name, term)
    return App(term.symbol, tuple(_subst_term(a, mapping) for a in term.args))


_fresh_counter = itertools.count()


def substitute(formula: Formula, mapping: Mapping[str, Term]) -> Formula:
    """Capture-avoiding substitution of terms for free variables"""
    if isinstance(formula, (Top, Bot)):
        return formula
    if isinstance(formula, Eq):
        return Eq(_subst_term(formula.left, mapping), _subst_term(formula.right, mapping))
    if isinstance(formula, Rel):
        return Rel(formula.symbol, tuple(_subst_term(a, mapping) for a in formula.args))
    if isinstance(formula, And):
        return And(tuple(substitute(p, mapping) for p in formula.parts))
    if isinstance(formula, Or):
        return Or(tuple(substitute(p, mapping) for p in formula.parts))

    bound = [v for v, _ in formula.variables]
    inner = {k: t for k, t in mapping.items() if k not in bound}
    incoming: Set[str] = set()
    for t in inner.values():
        incoming |= term_vars(t)
    variables = []
    for v, sort in formula.variables:
        if v in incoming:
            fresh = f"_v{next(_fresh_counter)}"
            inner[v] = Var(fresh)
            variables.append((fresh, sort))
        else:
            variables.append((v, sort))
    return Exists(tuple(variables), substitute(formula.body, inner))


def rename(formula: Formula, names: Mapping[str, str]) -> Formula:
    return substitute(formula, {old: Var(new) for old, new in names.items()})


# ---------------------------------------------------------------------------
# Printing

def format_term(term: Term) -> str:
    if isinstance(term, Var):
        return term.name
    if not term.args:
        return term.symbol
    return f"({term.symbol} {' '.join(format_term(a) for a in term.args)})"


def format_formula(formula: Formula) -> str:
    """Print a formula in prefix syntax"""
    if isinstance(formula, Top):
        return "top"
    if isinstance(formula, Bot):
        return "bot"
    if isinstance(formula, Eq):
        return f"(eq {format_term(formula.left)} {format_term(formula.right)})"
    if isinstance(formula, Rel):
        if not formula.args:
            return f"({formula.symbol})"
        return f"({formula.symbol} {' '.join(format_term(a) for a in formula.args)})"
    if isinstance(formula, And):
        return "(and" + "".join(" " + format_formula(p) for p in formula.parts) + ")"
    if isinstance(formula, Or):
        return "(or" + "".join(" " + format_formula(p) for p in formula.parts) + ")"
    binders = " ".join(f"({v} {s})" for v, s in formula.variables)
    return f"(exists ({binders}) {format_formula(formula.body)})"


def format_context(context: Context) -> str:
    return "[" + ", ".join(f"{v}:{s}" for v, s in context) + "]"


# ---------------------------------------------------------------------------
# Normal form

def _canon(formula: Formula, names: Dict[str, str], depth: int) -> Formula:
    if isinstance(formula, (Top, Bot)):
        return formula
    if isinstance(formula, Eq):
        left = _subst_term(formula.left, {k: Var(v) for k, v in names.items()})
        right = _subst_term(formula.right, {k: Var(v) for k, v in names.items()})
        a, b = sorted([left, right], key=format_term)
        return Eq(a, b)
    if isinstance(formula, Rel):
        return Rel(formula.symbol, tuple(_subst_term(a, {k: Var(v) for k, v in names.items()})
                                         for a in formula.args))
    if isinstance(formula, (And, Or)):
        kind = type(formula)
        unit, absorbing = (Top, Bot) if kind is And else (Bot, Top)
        parts: Dict[str, Formula] = {}
        for p in formula.parts:
            p = _canon(p, names, depth)
            flat = p.parts if isinstance(p, kind) else (p,)
            for q in flat:
                if isinstance(q, absorbing):
                    return q
                if not isinstance(q, unit):
                    parts[format_formula(q)] = q
        ordered = tuple(parts[k] for k in sorted(parts))
        if not ordered:
            return unit()
        return ordered[0] if len(ordered) == 1 else kind(ordered)

    inner = dict(names)
    variables = []
    for offset, (v, sort) in enumerate(formula.variables):
        canonical = f"z{depth + offset}"
        inner[v] = canonical
        variables.append((canonical, sort))
    body = _canon(formula.body, inner, depth + len(variables))
    if isinstance(body, Bot):
        return body
    return Exists(tuple(variables), body)


def normalize(formula: Formula, context: Context = ()) -> Tuple[Context, Formula]:
    """Alpha-normalize: context variables become x0, x1, ... and bound variables z0, z1, ..."""
    names = {v: f"x{i}" for i, (v, _) in enumerate(context)}
    new_context = tuple((f"x{i}", s) for i, (_, s) in enumerate(context))
    return new_context, _canon(formula, names, 0)


# ---------------------------------------------------------------------------
# Typing

def term_sort(sig: Signature, scope: Mapping[str, str], term: Term) -> str:
    if isinstance(term, Var):
        if term.name not in scope:
            raise PreconditionError("well-typed", f"variable {term.name} is not in context")
        return scope[term.name]
    if term.symbol not in sig.functions:
        raise PreconditionError("well-typed", f"unknown function symbol {term.symbol}")
    arg_sorts, result = sig.functions[term.symbol]
    if len(arg_sorts) != len(term.args):
        raise PreconditionError("well-typed", f"{term.symbol} expects {len(arg_sorts)} arguments")
    for expected, arg in zip(arg_sorts, term.args):
        actual = term_sort(sig, scope, arg)
        if actual != expected:
            raise PreconditionError("well-typed", f"{format_term(arg)} has sort {actual}, expected {expected}")
    return result


def check_formula(sig: Signature, scope: Mapping[str, str], formula: Formula) -> None:
    """Raise PreconditionError if formula is ill-typed in scope"""
    if isinstance(formula, (Top, Bot)):
        return
    if isinstance(formula, Eq):
        left, right = term_sort(sig, scope, formula.left), term_sort(sig, scope, formula.right)
        if left != right:
            raise PreconditionError("well-typed", f"equation between sorts {left} and {right}")
        return
    if isinstance(formula, Rel):
        if formula.symbol not in sig.relations:
            raise PreconditionError("well-typed", f"unknown relation symbol {formula.symbol}")
        arg_sorts = sig.relations[formula.symbol]
        if len(arg_sorts) != len(formula.args):
            raise PreconditionError("well-typed", f"{formula.symbol} expects {len(arg_sorts)} arguments")
        for expected, arg in zip(arg_sorts, formula.args):
            if term_sort(sig, scope, arg) != expected:
                raise PreconditionError("well-typed", f"{format_term(arg)} does not have sort {expected}")
        return
    if isinstance(formula, (And, Or)):
        for p in formula.parts:
            check_formula(sig, scope, p)
        return
    inner = dict(scope)
    for v, s in formula.variables:
        if s not in sig.sorts:
            raise PreconditionError("well-typed", f"unknown sort {s}")
        inner[v] = s
    check_formula(sig, inner, formula.body)


@dataclass(frozen=True)
class FormulaInContext:
    """A formula together with a typed variable list containing its free variables"""
    context: Context
    body: Formula

    @classmethod
    def of(cls, context: Iterable[Tuple[str, str]], body: Formula) -> "FormulaInContext":
        return cls(tuple(tuple(c) for c in context), body)

    @property
    def sorts(self) -> Tuple[str, ...]:
        return tuple(s for _, s in self.context)

    @property
    def variables(self) -> Tuple[str, ...]:
        return tuple(v for v, _ in self.context)

    def normalized(self) -> "FormulaInContext":
        return FormulaInContext(*normalize(self.body, self.context))

    @property
    def key(self) -> Tuple[Tuple[str, ...], str]:
        return self.sorts, format_formula(self.normalized().body)

    def check(self, sig: Signature) -> None:
        names = self.variables
        if len(set(names)) != len(names):
            raise PreconditionError("well-typed", f"repeated variable in context {format_context(self.context)}")
        for s in self.sorts:
            if s not in sig.sorts:
                raise PreconditionError("well-typed", f"unknown sort {s}")
        extra = free_vars(self.body) - set(names)
        if extra:
            raise PreconditionError("well-typed", f"free variables {sorted(extra)} not in context")
        check_formula(sig, dict(self.context), self.body)

    def instantiate(self, names: Sequence[str]) -> Formula:
        """The body with its context variables replaced by names"""
        if len(names) != len(self.context):
            raise PreconditionError("context-length", f"{len(names)} names for {len(self.context)} variables")
        return substitute(self.body, {v: Var(n) for v, n in zip(self.variables, names)})

    def __str__(self) -> str:
        return f"{format_context(self.context)}. {format_formula(self.body)}"


@dataclass(frozen=True)
class Sequent:
    """premise ⊢ conclusion in a shared context"""
    context: Context
    premise: Formula
    conclusion: Formula

    def check(self, sig: Signature) -> None:
        FormulaInContext(self.context, self.premise).check(sig)
        FormulaInContext(self.context, self.conclusion).check(sig)

    def __str__(self) -> str:
        return f"{format_context(self.context)} {format_formula(self.premise)} |- {format_formula(self.conclusion)}"


@dataclass(frozen=True)
class CoherentTheory:
    name: str
    signature: Signature
    axioms: Tuple[Sequent, ...] = ()

    def extend(self, axioms: Iterable[Sequent], name: Optional[str] = None) -> "CoherentTheory":
        return CoherentTheory(name or self.name, self.signature, self.axioms + tuple(axioms))


# ---------------------------------------------------------------------------
# Reading

@dataclass(frozen=True)
class _Token:
    text: str
    line: int
    column: int


def _tokenize(text: str) -> List[_Token]:
    tokens = []
    line, column = 1, 1
    i = 0
    while i < len(text):
        ch = text[i]
        if ch in "()":
            tokens.append(_Token(ch, line, column))
            i += 1
            column += 1
        elif ch.isspace():
            if ch == "\n":
                line, column = line + 1, 1
            else:
                column += 1
            i += 1
        else:
            start, start_col = i, column
            while i < len(text) and not text[i].isspace() and text[i] not in "()":
                i += 1
                column += 1
            tokens.append(_Token(text[start:i], line, start_col))
    return tokens


class _Reader:
    KEYWORDS = {"top", "bot", "eq", "and", "or", "exists"}

    def __init__(self, text: str, signature: Optional[Signature], source: str):
        self.tokens = _tokenize(text)
        self.pos = 0
        self.signature = signature
        self.source = source

    def error(self, message: str, token: Optional[_Token] = None) -> DocumentError:
        token = token or (self.tokens[self.pos] if self.pos < len(self.tokens) else None)
        if token is None:
            return DocumentError(f"{message} (unexpected end of formula)", self.source)
        return DocumentError(message, self.source, token.line, token.column)

    def peek(self) -> Optional[_Token]:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def take(self) -> _Token:
        token = self.peek()
        if token is None:
            raise self.error("expected more input")
        self.pos += 1
        return token

    def expect(self, text: str) -> _Token:
        token = self.take()
        if token.text != text:
            raise self.error(f"expected '{text}', found '{token.text}'", token)
        return token

    def formula(self, scope: Set[str]) -> Formula:
        token = self.take()
        if token.text == "top":
            return TOP
        if token.text == "bot":
            return BOT
        if token.text != "(":
            raise self.error(f"expected a formula, found '{token.text}'", token)
        head = self.take()
        if head.text == "eq":
            left, right = self.term(scope), self.term(scope)
            self.expect(")")
            return Eq(left, right)
        if head.text in ("and", "or"):
            parts = []
            while self.peek() is not None and self.peek().text != ")":
                parts.append(self.formula(scope))
            self.expect(")")
            return And(tuple(parts)) if head.text == "and" else Or(tuple(parts))
        if head.text == "exists":
            self.expect("(")
            variables = []
            while self.peek() is not None and self.peek().text == "(":
                self.take()
                name, sort = self.take(), self.take()
                if name.text in "()" or sort.text in "()":
                    raise self.error("malformed binder", name)
                variables.append((name.text, sort.text))
                self.expect(")")
            self.expect(")")
            body = self.formula(scope | {v for v, _ in variables})
            self.expect(")")
            return Exists(tuple(variables), body)
        if head.text in "()" or head.text in self.KEYWORDS:
            raise self.error(f"unexpected '{head.text}'", head)
        if self.signature is not None and head.text not in self.signature.relations:
            raise self.error(f"unknown relation symbol '{head.text}'", head)
        args = []
        while self.peek() is not None and self.peek().text != ")":
            args.append(self.term(scope))
        self.expect(")")
        return Rel(head.text, tuple(args))

    def term(self, scope: Set[str]) -> Term:
        token = self.take()
        if token.text == "(":
            head = self.take()
            if head.text in "()":
                raise self.error("expected a function symbol", head)
            if self.signature is not None and head.text not in self.signature.functions:
                raise self.error(f"unknown function symbol '{head.text}'", head)
            args = []
            while self.peek() is not None and self.peek().text != ")":
                args.append(self.term(scope))
            self.expect(")")
            return App(head.text, tuple(args))
        if token.text == ")":
            raise self.error("expected a term", token)
        if token.text in scope:
            return Var(token.text)
        if self.signature is not None and token.text in self.signature.functions:
            return App(token.text, ())
        raise self.error(f"unknown variable or constant '{token.text}'", token)


def parse_formula(text: str, signature: Optional[Signature] = None, scope: Iterable[str] = (),
                  source: str = "<formula>") -> Formula:
    """Read a formula in prefix syntax; errors carry line and column"""
    reader = _Reader(text, signature, source)
    formula = reader.formula(set(scope))
    if reader.peek() is not None:
        raise reader.error(f"trailing input '{reader.peek().text}'")
    return formula


def parse_in_context(context: Iterable[Tuple[str, str]], text: str, signature: Signature,
                     source: str = "<formula>") -> FormulaInContext:
    context = tuple(tuple(c) for c in context)
    body = parse_formula(text, signature, [v for v, _ in context], source)
    fic = FormulaInContext(context, body)
    try:
        fic.check(signature)
    except PreconditionError as e:
        raise DocumentError(str(e), source)
    return fic
