"""Giraud bases on Grothendieck totals and lifted bases on comma categories"""
import itertools
import logging
from dataclasses import dataclass
from typing import Dict, List, Set

from overtopos_sites.src.categories.constructions import (
    CommaCategory,
    comma_arrow_id,
    comma_category,
    compute_limit,
    cospan_diagram,
)
from overtopos_sites.src.categories.fincat import FinFunctor
from overtopos_sites.src.errors import LimitMissing, PreconditionError
from overtopos_sites.src.fibrations.grothendieck import GrothendieckTotal
from overtopos_sites.src.sheaves.cartesian import is_cartesian_functor
from overtopos_sites.src.topologies.coverage import CoverageBasis, Presieve, saturate_basis

logger = logging.getLogger(__name__)


def giraud_basis(total: GrothendieckTotal, base_basis: CoverageBasis, name: str = "giraud") -> CoverageBasis:
    """Cartesian lifts of the base families at every object of the total category"""
    base = total.indexed.base
    if set(base_basis.category.arrows) != set(base.arrows):
        raise PreconditionError("shared-site", f"{base_basis.name} is not a basis on {base.name}")
    generators: Dict[str, List[Presieve]] = {x: [] for x in total.category.objects}
    for x, (c, a) in sorted(total.points.items()):
        for R in base_basis.at(c):
            lifts = []
            for f in R.sorted_arrows:
                if (f, a) not in total.lifts:
                    raise PreconditionError("lift-data", f"no cartesian lift of {f} at {a}")
                lifts.append(total.lift(f, a))
            generators[x].append(Presieve.of(x, lifts))
    logger.info(f"Giraud basis on {total.category.name}: "
                f"{sum(len(v) for v in generators.values())} generating families")
    return saturate_basis(total.category, generators, name)


@dataclass(frozen=True, eq=False)
class LiftedSite:
    """The comma category (1_D ↓ f*) with its lifted basis"""
    comma: CommaCategory
    basis: CoverageBasis
    fstar: FinFunctor


def lifted_basis(fstar: FinFunctor, B_C: CoverageBasis, B_D: CoverageBasis, name: str = "lifted") -> LiftedSite:
    """Multicomposites of lifts of B_C families with B_D covers of the pulled-back objects"""
    C, D = fstar.source, fstar.target
    report = is_cartesian_functor(fstar)
    if not report.valid:
        raise PreconditionError("cartesian-functor", f"{fstar.name} does not preserve finite limits")
    comma = comma_category(FinFunctor.identity(D), fstar, name=f"(1|{fstar.name})")
    cat = comma.category
    generators: Dict[str, Set[Presieve]] = {x: set() for x in cat.objects}

    for x, (F, c, alpha) in sorted(comma.triples.items()):
        for R in B_C.at(c):
            # Step 1: pull each ξ_i back along α in D
            per_member: List[List[Set[str]]] = []
            for xi in R.sorted_arrows:
                c_i = C.dom(xi)
                witness = compute_limit(D, cospan_diagram(D, fstar.arr(xi), alpha))
                if witness is None:
                    raise LimitMissing(f"{D.name} has no pullback of {fstar.arr(xi)} and {alpha}")
                pi, rho, P = witness.leg("0"), witness.leg("1"), witness.apex
                source = comma.index[(P, c_i, pi)]

                # Step 2: every B_D cover of the pullback object gives one choice of inner arrows
                options = []
                for S in B_D.at(P):
                    arrows = set()
                    for b in S.sorted_arrows:
                        inner_source = comma.index[(D.dom(b), c_i, D.compose(pi, b))]
                        arrow = comma_arrow_id(D.compose(rho, b), xi, inner_source, x)
                        if arrow not in cat.arrows:
                            raise PreconditionError("comma-square", f"{arrow} is not an arrow of {cat.name}")
                        arrows.add(arrow)
                    options.append(arrows)
                logger.debug(f"Lift of {xi} at {x} through {source}: {len(options)} inner covers")
                per_member.append(options)

            # Step 3: one multicomposite per choice of inner covers
            for choice in itertools.product(*per_member):
                generators[x].add(Presieve.of(x, set().union(*choice)))

    basis = saturate_basis(cat, generators, name)
    logger.info(f"Lifted basis on {cat.name}: {basis.count()} families")
    return LiftedSite(comma, basis, fstar)

