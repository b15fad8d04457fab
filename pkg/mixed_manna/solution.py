""" Mapping of LCP solutions back to market prices and allocations,
rescaling, and the end-to-end solving pipeline. """

from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Mapping, Optional, Sequence, Tuple, Union
from warnings import warn

from mixed_manna import lemke, logging
from mixed_manna.instance import (
    Instance,
    PreprocessResult,
    check_sufficiency,
    fill_segments,
    normalize,
    preprocess,
)
from mixed_manna.lcp import VariableLabel, Z_LABEL, build_mixed_lcp, choose_constants
from mixed_manna.lemke import TerminationKind, TraceEntry

# allocation[agent][item][segment]
SegmentAllocation = Tuple[Tuple[Tuple[Fraction, ...], ...], ...]


@dataclass(frozen=True)
class Equilibrium:
    """Signed prices (goods positive, bads negative), per-segment
    allocation and the budgets Σ_j W_ij p_j they induce.  `unallocated`
    holds the free-disposal remainder of zero-price goods, per item."""

    prices: Tuple[Fraction, ...]
    allocation: SegmentAllocation
    budgets: Tuple[Fraction, ...]
    unallocated: Tuple[Fraction, ...]

    @property
    def num_agents(self) -> int:
        return len(self.allocation)

    @property
    def num_items(self) -> int:
        return len(self.prices)

    def bundles(self) -> Tuple[Tuple[Fraction, ...], ...]:
        """Aggregated allocation x_ij = Σ_k x_ijk."""
        return tuple(
            tuple(sum(pieces, Fraction(0)) for pieces in row)
            for row in self.allocation
        )

    def key(self) -> Tuple:
        """Exact identity of the equilibrium at its current scale."""
        return (self.prices, self.bundles())


def budgets_at(instance: Instance, prices: Sequence[Fraction]) -> Tuple[Fraction, ...]:
    return tuple(
        sum((w * p for w, p in zip(row, prices)), Fraction(0))
        for row in instance.endowments
    )


def make_equilibrium(
    instance: Instance,
    prices: Sequence[Fraction],
    allocation: SegmentAllocation,
    unallocated: Optional[Sequence[Fraction]] = None,
) -> Equilibrium:
    """Assemble an `Equilibrium`, computing budgets from the endowments."""
    prices = tuple(Fraction(p) for p in prices)
    if unallocated is None:
        unallocated = [Fraction(0)] * len(prices)
    return Equilibrium(
        prices=prices,
        allocation=allocation,
        budgets=budgets_at(instance, prices),
        unallocated=tuple(Fraction(u) for u in unallocated),
    )


def from_bundles(
    instance: Instance,
    prices: Sequence[Union[int, Fraction, str]],
    bundles: Sequence[Sequence[Union[int, Fraction, str]]],
    unallocated: Optional[Sequence[Fraction]] = None,
) -> Equilibrium:
    """Build an equilibrium candidate from aggregated bundles, filling
    each agent's segments in order."""
    allocation = tuple(
        tuple(
            fill_segments(instance, agent, item, Fraction(amount))
            for item, amount in enumerate(row)
        )
        for agent, row in enumerate(bundles)
    )
    return make_equilibrium(
        instance, [Fraction(p) for p in prices], allocation, unallocated
    )


def extract_equilibrium(
    vertex: Mapping[VariableLabel, Fraction],
    preprocessed: PreprocessResult,
    P: Fraction,
) -> Equilibrium:
    """Read prices p*_j = ±(P - p_j) and allocations x_ijk = f_ijk / |p*_j|
    off a solution vertex of the reduced instance's LCP, and reinsert the
    zero-price items fixed by preprocessing.

    The result lives on `preprocessed.instance`."""
    if vertex.get(Z_LABEL, Fraction(0)) > 0:
        raise ValueError("Vertex has z > 0; it is not an LCP solution")
    full = preprocessed.instance
    classes = preprocessed.classes
    prices = [Fraction(0)] * full.num_items
    allocation = [
        [
            [Fraction(0)] * len(full.segments(agent, item))
            for item in range(full.num_items)
        ]
        for agent in range(full.num_agents)
    ]
    for reduced_item, item in enumerate(preprocessed.active_items):
        p_value = vertex.get(VariableLabel.price(reduced_item), Fraction(0))
        if p_value >= P:
            raise ValueError(
                f"p[{reduced_item}] = {p_value} reaches P; the vertex is the "
                f"degenerate non-equilibrium solution"
            )
        magnitude = P - p_value
        prices[item] = magnitude if classes[item].is_good else -magnitude
        for agent in range(full.num_agents):
            for k in range(len(full.segments(agent, item))):
                label = VariableLabel.spending(agent, reduced_item, k)
                allocation[agent][item][k] = vertex.get(label, Fraction(0)) / magnitude
    unallocated = [Fraction(0)] * full.num_items
    for item, rows in preprocessed.fixed_allocation.items():
        for agent, amounts in enumerate(rows):
            allocation[agent][item] = list(amounts)
        unallocated[item] = preprocessed.unallocated[item]
    return make_equilibrium(
        full,
        prices,
        tuple(tuple(tuple(pieces) for pieces in row) for row in allocation),
        unallocated,
    )


def rescale(equilibrium: Equilibrium, factor: Fraction) -> Equilibrium:
    """Multiply prices and budgets by a positive factor."""
    factor = Fraction(factor)
    if factor <= 0:
        raise ValueError(f"Scale factor must be positive, got {factor}")
    return Equilibrium(
        prices=tuple(p * factor for p in equilibrium.prices),
        allocation=equilibrium.allocation,
        budgets=tuple(b * factor for b in equilibrium.budgets),
        unallocated=equilibrium.unallocated,
    )


def canonical(equilibrium: Equilibrium) -> Equilibrium:
    """Rescale so the largest absolute price is 1."""
    largest = max((abs(p) for p in equilibrium.prices), default=Fraction(0))
    if largest == 0:
        return equilibrium
    return rescale(equilibrium, 1 / largest)


def denormalize(
    equilibrium: Equilibrium, supplies: Sequence[Fraction]
) -> Equilibrium:
    """Map an equilibrium of the unit-supply instance back to the original
    units: p_j = p'_j / S_j and x_ijk = x'_ijk * S_j (budgets unchanged)."""
    return Equilibrium(
        prices=tuple(p / s for p, s in zip(equilibrium.prices, supplies)),
        allocation=tuple(
            tuple(
                tuple(piece * supplies[item] for piece in pieces)
                for item, pieces in enumerate(row)
            )
            for row in equilibrium.allocation
        ),
        budgets=equilibrium.budgets,
        unallocated=tuple(
            u * s for u, s in zip(equilibrium.unallocated, supplies)
        ),
    )


@dataclass(frozen=True)
class SolveResult:
    """Outcome of `solve_instance`.  `equilibrium` is set only when the
    run ended at a solution; it is in the instance's own units, at
    canonical scale."""

    status: TerminationKind
    equilibrium: Optional[Equilibrium]
    iterations: int
    trace: Tuple[TraceEntry, ...]
    seed: int
    reruns: int
    lcp_size: int
    detail: Optional[lemke.TerminationStatus] = None


@logging.loggable
def solve_instance(
    instance: Instance,
    seed: int = 0,
    max_iters: Optional[int] = None,
    retries: int = 3,
    check_invariants: bool = True,
    log: Union[bool, Dict] = False,  # pylint: disable=unused-argument
) -> SolveResult:
    """Compute a competitive equilibrium with Lemke's scheme.

    args:
        instance: the market, in any units.

        seed: seed of the perturbation of the goods' spending rows.

        max_iters: pivot limit, 50 per LCP row by default.

        retries: number of re-runs with seeds seed+1, seed+2, ... after a
        degenerate pivot.

        check_invariants: assert the path invariants at every vertex.

    returns:
        A `SolveResult`.
    """
    sufficiency = check_sufficiency(instance)
    if not sufficiency.holds:
        warn(
            "Sufficiency conditions do not hold; an equilibrium may not "
            "exist and the run may end on a secondary ray"
        )
    normalized, supplies = normalize(instance)
    preprocessed = preprocess(normalized)
    P = Fraction(1)
    if preprocessed.reduced.num_items == 0:
        equilibrium = extract_equilibrium({}, preprocessed, P)
        return SolveResult(
            status=TerminationKind.SOLUTION,
            equilibrium=canonical(denormalize(equilibrium, supplies)),
            iterations=0,
            trace=(),
            seed=seed,
            reruns=0,
            lcp_size=0,
        )
    P, R = choose_constants(preprocessed.reduced)
    reruns = 0
    while True:
        lcp = build_mixed_lcp(preprocessed.reduced, P, R, seed=seed + reruns)
        result = lemke.run(lcp, max_iters=max_iters, check_invariants=check_invariants)
        if result.status.kind is not TerminationKind.DEGENERACY or reruns >= retries:
            break
        reruns += 1
        warn(f"Degenerate pivot with seed {seed + reruns - 1}; re-running")
    equilibrium = None
    if result.status.is_solution:
        assert result.status.vertex is not None
        equilibrium = canonical(
            denormalize(
                extract_equilibrium(result.status.vertex, preprocessed, P), supplies
            )
        )
    return SolveResult(
        status=result.status.kind,
        equilibrium=equilibrium,
        iterations=result.iterations,
        trace=result.trace,
        seed=seed + reruns,
        reruns=reruns,
        lcp_size=lcp.size,
        detail=result.status,
    )
