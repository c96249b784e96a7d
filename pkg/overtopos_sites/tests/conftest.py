"""Shared fixtures: the fragment of pairs over the theory of objects, small lattices and workspaces"""
from typing import Callable, Iterable, Optional

import pytest

from overtopos_sites.config.config import WORKSPACE_DIR
from overtopos_sites.src.categories.fincat import FinCategory, FinFunctor, poset_category
from overtopos_sites.src.logic.fragment import FragmentArrow, FragmentSite, compile_fragment
from overtopos_sites.src.logic.semantics import FinStructure
from overtopos_sites.src.logic.syntax import CoherentTheory, Signature, parse_in_context
from overtopos_sites.src.topologies.coverage import CoverageBasis, frame_basis, trivial_basis

OBJECTS = Signature(("A",), {}, {}, "objects")
MARKED = Signature(("A",), {}, {"P": ("A",)}, "marked")

X = [("x", "A")]
XY = [("x", "A"), ("y", "A")]
XYZ = [("x", "A"), ("y", "A"), ("z", "A")]
XUV = [("x", "A"), ("u", "A"), ("v", "A")]
XYUV = [("x", "A"), ("y", "A"), ("u", "A"), ("v", "A")]

# name: (dom, cod, context, theta)
PAIR_ARROWS = {
    "p1": ("XX", "X", XYZ, "(eq z x)"),
    "p2": ("XX", "X", XYZ, "(eq z y)"),
    "d": ("X", "XX", XUV, "(and (eq u x) (eq v x))"),
    "sw": ("XX", "XX", XYUV, "(and (eq u y) (eq v x))"),
    "e": ("X", "E", XUV, "(and (eq u x) (eq v x))"),
    "i": ("E", "XX", XYUV, "(and (eq x y) (eq u x) (eq v y))"),
    "m": ("P", "X", XY, "(and (P x) (eq y x))"),
}

PAIR_FORMULAS = {
    "one": ([], "top"),
    "X": (X, "top"),
    "XX": (XY, "top"),
    "E": (XY, "(eq x y)"),
    "P": (X, "(P x)"),
}


def model(size: int, marked: Optional[Iterable[int]] = None) -> FinStructure:
    """A model with carrier m0..m{size-1}; with marked, of the signature with the unary relation P"""
    carrier = [f"m{i}" for i in range(size)]
    if marked is None:
        return FinStructure.build(OBJECTS, {"A": carrier}, name=f"M{size}")
    return FinStructure.build(MARKED, {"A": carrier}, relations={"P": [(f"m{i}",) for i in marked if i < size]},
                              name=f"M{size}")


def pairs_fragment(M: FinStructure, formulas: Iterable[str] = ("one", "X", "XX", "E"),
                   cover: bool = True) -> FragmentSite:
    """The fragment on the chosen formulas with every pool arrow whose ends are present"""
    sig = M.signature
    theory = CoherentTheory(sig.name, sig)
    chosen = {"one"} | set(formulas)
    fics = {phi: parse_in_context(ctx, body, sig) for phi, (ctx, body) in PAIR_FORMULAS.items() if phi in chosen}
    arrows = [FragmentArrow(name, dom, cod, parse_in_context(ctx, theta, sig))
              for name, (dom, cod, ctx, theta) in PAIR_ARROWS.items() if dom in fics and cod in fics]
    covers = [("E", ["e"])] if cover and {"X", "E"} <= set(fics) else []
    return compile_fragment(theory, M, fics, arrows, covers, name="pairs")


def chain(n: int) -> FinCategory:
    """The chain 0 < 1 < ... < n-1"""
    return poset_category(f"chain{n}", [str(i) for i in range(n)], lambda x, y: int(x) <= int(y))


def square_lattice() -> FinCategory:
    """0 < a, b < 1"""
    order = {("0", "a"), ("0", "b"), ("0", "1"), ("a", "1"), ("b", "1")}
    return poset_category("L", ["0", "a", "b", "1"], lambda x, y: x == y or (x, y) in order)


def lattice_join(cat: FinCategory) -> Callable[[Iterable[str]], str]:
    """Joins in a finite lattice given as a poset category"""
    def join(elements: Iterable[str]) -> str:
        elements = list(elements)
        bounds = [z for z in cat.objects if all(cat.hom(x, z) for x in elements)]
        return next(z for z in bounds if all(cat.hom(z, w) for w in bounds))
    return join


def frame(cat: FinCategory) -> CoverageBasis:
    return frame_basis(cat, lattice_join(cat), f"frame({cat.name})")


def monotone(source: FinCategory, target: FinCategory, values: dict, name: str) -> FinFunctor:
    """The functor of a monotone map between poset categories"""
    arrows = {f: f"{values[d]}<={values[c]}" for f, (d, c) in source.arrows.items()}
    return FinFunctor(source, target, dict(values), arrows, name)


@pytest.fixture
def objects_model() -> FinStructure:
    return model(2)


@pytest.fixture
def pairs(objects_model) -> FragmentSite:
    return pairs_fragment(objects_model)


@pytest.fixture
def lattice() -> FinCategory:
    return square_lattice()


@pytest.fixture
def lattice_frame(lattice) -> CoverageBasis:
    return frame(lattice)


@pytest.fixture
def lattice_trivial(lattice) -> CoverageBasis:
    return trivial_basis(lattice)


@pytest.fixture
def workspace_path() -> Callable[[str], str]:
    def path(name: str) -> str:
        return str(WORKSPACE_DIR / f"{name}.json")
    return path


@pytest.fixture
def write_workspace(tmp_path) -> Callable[[str, str], str]:
    """Write a document into a temporary directory and return its path"""
    def write(name: str, text: str) -> str:
        target = tmp_path / name
        target.write_text(text)
        return str(target)
    return write
