""" Brute-force enumeration of the competitive equilibria of tiny
instances, by trying every assignment of forced / flexible / undesirable
labels to segments and solving the linear system each one induces.

Exponential in the number of segments; it exists to provide ground truth
for the pivoting solver and to count equilibria. """

from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from math import prod
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
from tqdm.auto import tqdm

from mixed_manna import logging
from mixed_manna.instance import Instance, PreprocessResult, normalize, preprocess
from mixed_manna.solution import (
    Equilibrium,
    canonical,
    denormalize,
    make_equilibrium,
)
from mixed_manna.verify import SegmentLabel, verify_equilibrium

DEFAULT_SEGMENT_CAP = 12

# (number of forced segments, whether the next segment is flexible)
FunctionOption = Tuple[int, bool]


class OracleCapExceeded(ValueError):
    """The instance is too large to enumerate."""


@dataclass(frozen=True)
class Configuration:
    """Labels for every segment of the reduced instance.  For agent i and
    reduced item j, `options[i][j] = (t, flexible)` makes the first t
    segments forced, segment t flexible if `flexible` is set, and the
    rest undesirable, so a forced segment never follows a flexible one."""

    options: Tuple[Tuple[FunctionOption, ...], ...]

    def label(self, agent: int, item: int, segment: int) -> SegmentLabel:
        forced, flexible = self.options[agent][item]
        if segment < forced:
            return SegmentLabel.FORCED
        if segment == forced and flexible:
            return SegmentLabel.FLEXIBLE
        return SegmentLabel.UNDESIRABLE


@dataclass(frozen=True)
class OracleResult:
    """Distinct equilibria in the instance's own units at canonical scale.
    `degenerate_family` is set when some configuration left the system
    underdetermined and still produced an equilibrium, in which case the
    instance has a continuum of equilibria and the list is not a count."""

    equilibria: Tuple[Equilibrium, ...]
    degenerate_family: bool
    configurations: int

    @property
    def count(self) -> int:
        return len(self.equilibria)


def function_options(instance: Instance, agent: int, item: int, is_good: bool):
    """Label options of one utility function.  The final segment is
    unbounded and can never be forced.  Goods an agent does not like at
    all are never consumed."""
    segments = instance.segments(agent, item)
    if is_good and segments[0].slope <= 0:
        return [(0, False)]
    return [(forced, False) for forced in range(len(segments))] + [
        (forced, True) for forced in range(len(segments))
    ]


def _item_combinations(
    instance: Instance, item: int, is_good: bool
) -> List[Tuple[FunctionOption, ...]]:
    """Per-agent options for one item whose forced amount fits in the unit
    supply and whose flexible segments can make up the rest."""
    combos = []
    per_agent = [
        function_options(instance, agent, item, is_good)
        for agent in range(instance.num_agents)
    ]
    for combo in product(*per_agent):
        forced_total = Fraction(0)
        room = Fraction(0)
        unbounded = False
        for agent, (forced, flexible) in enumerate(combo):
            segments = instance.segments(agent, item)
            forced_total += sum((s.length for s in segments[:forced]), Fraction(0))
            if flexible:
                if forced == len(segments) - 1:
                    unbounded = True
                else:
                    room += segments[forced].length
        if forced_total <= 1 and (unbounded or forced_total + room >= 1):
            combos.append(combo)
    return combos


def solve_exact(
    matrix: np.ndarray, rhs: np.ndarray
) -> Optional[Tuple[np.ndarray, bool]]:
    """Gauss-Jordan elimination over the rationals.  Returns None for an
    inconsistent system, else a solution with free variables at zero and
    whether any variable was free."""
    rows, cols = matrix.shape
    augmented = np.concatenate([matrix, rhs.reshape(-1, 1)], axis=1)
    pivots: List[int] = []
    row = 0
    for col in range(cols):
        if row == rows:
            break
        nonzero = [r for r in range(row, rows) if augmented[r, col] != 0]
        if not nonzero:
            continue
        augmented[[row, nonzero[0]]] = augmented[[nonzero[0], row]]
        augmented[row] = augmented[row] / augmented[row, col]
        for other in np.flatnonzero(augmented[:, col] != 0):
            if other != row:
                factor = augmented[other, col]
                augmented[other] = augmented[other] - factor * augmented[row]
        pivots.append(col)
        row += 1
    if any(augmented[r, cols] != 0 for r in range(row, rows)):
        return None
    solution = np.full(cols, Fraction(0), dtype=object)
    for position, col in enumerate(pivots):
        solution[col] = augmented[position, cols]
    return solution, len(pivots) < cols


def _forced_units(
    instance: Instance, config: Configuration, agent: int, item: int
) -> Fraction:
    forced, _ = config.options[agent][item]
    return sum(
        (segment.length for segment in instance.segments(agent, item)[:forced]),
        Fraction(0),
    )


def _equilibrium_of(
    preprocessed: PreprocessResult, config: Configuration
) -> Tuple[Optional[Equilibrium], bool]:
    """Solve the system a configuration induces on the reduced instance and
    lift a feasible solution to the full (normalized) instance."""
    reduced = preprocessed.reduced
    goods = [c.is_good for c in preprocessed.reduced_classes]
    num_items = reduced.num_items
    flexible = [
        (agent, item, config.options[agent][item][0])
        for agent in range(reduced.num_agents)
        for item in range(num_items)
        if config.options[agent][item][1]
    ]
    level_agents = sorted({agent for agent, _, _ in flexible})
    r_col = {agent: num_items + k for k, agent in enumerate(level_agents)}
    f_col = {
        segment: num_items + len(level_agents) + k
        for k, segment in enumerate(flexible)
    }
    num_vars = num_items + len(level_agents) + len(flexible)
    equations: List[Dict[int, Fraction]] = []
    constants: List[Fraction] = []

    # Flexible segments sit exactly at the agent's level: U r_i = |p_j|
    for agent, item, k in flexible:
        segment = reduced.segments(agent, item)[k]
        weight = segment.slope if goods[item] else segment.magnitude
        equations.append({r_col[agent]: weight, item: Fraction(-1)})
        constants.append(Fraction(0))

    # Clearing, in money: flexible spending plus forced units times |p_j|
    for item in range(num_items):
        forced = sum(
            (
                _forced_units(reduced, config, agent, item)
                for agent in range(reduced.num_agents)
            ),
            Fraction(0),
        )
        row = {item: forced - 1}
        for segment, col in f_col.items():
            if segment[1] == item:
                row[col] = Fraction(1)
        equations.append(row)
        constants.append(Fraction(0))

    # Budgets: goods bought minus bads taken on equals the endowment's worth
    for agent in range(reduced.num_agents):
        row = {}
        for item in range(num_items):
            sign = 1 if goods[item] else -1
            row[item] = sign * (
                _forced_units(reduced, config, agent, item)
                - reduced.endowments[agent][item]
            )
        for (owner, item, _), col in f_col.items():
            if owner == agent:
                row[col] = Fraction(1) if goods[item] else Fraction(-1)
        equations.append(row)
        constants.append(Fraction(0))

    equations.append({item: Fraction(1) for item in range(num_items)})
    constants.append(Fraction(1))

    matrix = np.full((len(equations), num_vars), Fraction(0), dtype=object)
    for position, row in enumerate(equations):
        for col, value in row.items():
            matrix[position, col] = value
    rhs = np.array(constants, dtype=object)
    solved = solve_exact(matrix, rhs)
    if solved is None:
        return None, False
    values, underdetermined = solved
    magnitudes = values[:num_items]
    if any(value <= 0 for value in magnitudes):
        return None, False
    if any(values[col] <= 0 for col in r_col.values()):
        return None, False

    full = preprocessed.instance
    prices = [Fraction(0)] * full.num_items
    allocation = [
        [
            [Fraction(0)] * len(full.segments(agent, item))
            for item in range(full.num_items)
        ]
        for agent in range(full.num_agents)
    ]
    for reduced_item, item in enumerate(preprocessed.active_items):
        magnitude = magnitudes[reduced_item]
        prices[item] = magnitude if goods[reduced_item] else -magnitude
        for agent in range(full.num_agents):
            forced, _ = config.options[agent][reduced_item]
            for k in range(forced):
                allocation[agent][item][k] = full.segments(agent, item)[k].length
    for (agent, reduced_item, k), col in f_col.items():
        amount = values[col] / magnitudes[reduced_item]
        item = preprocessed.active_items[reduced_item]
        segments = full.segments(agent, item)
        if values[col] < 0 or (k < len(segments) - 1 and amount > segments[k].length):
            return None, False
        allocation[agent][item][k] = amount
    unallocated = [Fraction(0)] * full.num_items
    for item, rows in preprocessed.fixed_allocation.items():
        for agent, amounts in enumerate(rows):
            allocation[agent][item] = list(amounts)
        unallocated[item] = preprocessed.unallocated[item]
    equilibrium = make_equilibrium(
        full,
        prices,
        tuple(tuple(tuple(pieces) for pieces in row) for row in allocation),
        unallocated,
    )
    if not verify_equilibrium(full, equilibrium).overall:
        return None, False
    return equilibrium, underdetermined


def configurations(preprocessed: PreprocessResult):
    """Generator over all configurations surviving the per-item supply
    pruning, with the total number before pruning across items."""
    reduced = preprocessed.reduced
    goods = [c.is_good for c in preprocessed.reduced_classes]
    per_item = [
        _item_combinations(reduced, item, goods[item])
        for item in range(reduced.num_items)
    ]
    total = prod(len(combos) for combos in per_item)

    def generate():
        for choice in product(*per_item):
            yield Configuration(
                tuple(
                    tuple(choice[item][agent] for item in range(reduced.num_items))
                    for agent in range(reduced.num_agents)
                )
            )

    return generate(), total


@logging.loggable
def enumerate_equilibria(
    instance: Instance,
    cap: int = DEFAULT_SEGMENT_CAP,
    progress: bool = False,
    log: Union[bool, Dict] = False,  # pylint: disable=unused-argument
) -> OracleResult:
    """Enumerate the competitive equilibria of a small instance.

    args:
        instance: the market, in any units.

        cap: largest total number of segments accepted.

        progress: show a progress bar over configurations.

    returns:
        An `OracleResult` with the equilibria in the instance's own units,
        canonically scaled and deduplicated, in discovery order.
    """
    if instance.total_segments > cap:
        raise OracleCapExceeded(
            f"Instance has {instance.total_segments} segments; the oracle "
            f"accepts at most {cap}"
        )
    normalized, supplies = normalize(instance)
    preprocessed = preprocess(normalized)
    generator, total = configurations(preprocessed)
    found: Dict[Tuple, Equilibrium] = {}
    degenerate = False
    examined = 0
    for config in tqdm(generator, total=total, disable=not progress):
        examined += 1
        if preprocessed.reduced.num_items == 0:
            equilibrium, underdetermined = _fixed_only(preprocessed), False
        else:
            equilibrium, underdetermined = _equilibrium_of(preprocessed, config)
        if equilibrium is None:
            continue
        degenerate = degenerate or underdetermined
        scaled = canonical(denormalize(equilibrium, supplies))
        found.setdefault(scaled.key(), scaled)
    return OracleResult(
        equilibria=tuple(found.values()),
        degenerate_family=degenerate,
        configurations=examined,
    )


def _fixed_only(preprocessed: PreprocessResult) -> Equilibrium:
    """The equilibrium of an instance whose items are all priced at zero."""
    full = preprocessed.instance
    allocation = tuple(
        tuple(
            preprocessed.fixed_allocation[item][agent]
            for item in range(full.num_items)
        )
        for agent in range(full.num_agents)
    )
    return make_equilibrium(
        full,
        [Fraction(0)] * full.num_items,
        allocation,
        [preprocessed.unallocated[item] for item in range(full.num_items)],
    )


def count_equilibria(
    instance: Instance, cap: int = DEFAULT_SEGMENT_CAP
) -> Optional[int]:
    """Number of equilibria, or None when they form a continuum."""
    result = enumerate_equilibria(instance, cap=cap)
    return None if result.degenerate_family else result.count
