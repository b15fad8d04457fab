""" Domain model for fair division of mixed manna: instances with
separable piecewise-linear concave (SPLC) utilities, item classification,
preprocessing of zero-price items and the sufficiency conditions for
existence of a competitive equilibrium. """

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple, Union

import networkx as nx

# Anything Fraction() accepts without loss: ints, Fractions, "p/q" strings
Rational = Union[int, Fraction, str]

# The last segment of every utility function is unbounded; it is stored
# with length supply + LAST_SEGMENT_PAD so that it can never fill up.
LAST_SEGMENT_PAD = Fraction(1, 10)


class Setting(Enum):
    """Market model the instance was specified in."""

    EXCHANGE = "exchange"
    FISHER = "fisher"
    CEEI = "ceei"


class ItemKind(Enum):
    """Sign of an item: goods get non-negative prices, bads negative."""

    GOOD = "good"
    BAD = "bad"


class ItemStatus(Enum):
    """Preprocessing status of an item."""

    ACTIVE = "active"
    ZERO_PRICE_GOOD = "zero_price_good"
    ZERO_PRICE_BAD = "zero_price_bad"


@dataclass(frozen=True)
class Segment:
    """One linear piece of an agent's utility function for an item:
    utility `slope` per unit, over `length` units."""

    slope: Fraction
    length: Fraction

    @property
    def magnitude(self) -> Fraction:
        """Absolute slope; the disutility D_ijk of a bad segment."""
        return abs(self.slope)


@dataclass(frozen=True)
class ItemClass:
    """Classification of a single item."""

    kind: ItemKind
    status: ItemStatus = ItemStatus.ACTIVE

    @property
    def is_good(self) -> bool:
        return self.kind is ItemKind.GOOD

    @property
    def is_active(self) -> bool:
        return self.status is ItemStatus.ACTIVE


# utilities[agent][item] is the ordered tuple of segments of u_ij
UtilityTable = Tuple[Tuple[Tuple[Segment, ...], ...], ...]


@dataclass(frozen=True)
class Instance:
    """A mixed-manna market: SPLC utilities, an endowment matrix and the
    setting it was specified in.  Fisher and CEEI instances carry
    materialized endowments W_ij proportional to the agent weights."""

    utilities: UtilityTable
    endowments: Tuple[Tuple[Fraction, ...], ...]
    setting: Setting = Setting.EXCHANGE
    weights: Optional[Tuple[Fraction, ...]] = None

    def __post_init__(self):
        if len(self.utilities) == 0:
            raise ValueError("An instance needs at least one agent")
        if len(self.utilities) != len(self.endowments):
            raise ValueError(
                f"{len(self.utilities)} utility rows but "
                f"{len(self.endowments)} endowment rows"
            )
        num_items = len(self.endowments[0])
        for agent, (functions, row) in enumerate(
            zip(self.utilities, self.endowments)
        ):
            if len(functions) != num_items or len(row) != num_items:
                raise ValueError(
                    f"Agent {agent} does not describe exactly {num_items} items"
                )
            for item, segments in enumerate(functions):
                _check_segments(segments, agent, item)
            if any(amount < 0 for amount in row):
                raise ValueError(f"Agent {agent} has a negative endowment")
        for item in range(num_items):
            if self.supply(item) <= 0:
                raise ValueError(f"Item {item} has no supply")
        self._check_weights()

    def _check_weights(self):
        if self.setting is Setting.FISHER and self.weights is None:
            raise ValueError("Fisher instances need agent weights")
        weights = self.weights
        if weights is None:
            if self.setting is not Setting.CEEI:
                return
            weights = tuple(Fraction(1) for _ in range(self.num_agents))
        if len(weights) != self.num_agents:
            raise ValueError("Need exactly one weight per agent")
        if any(weight <= 0 for weight in weights):
            raise ValueError("Agent weights must be positive")
        if self.setting is Setting.EXCHANGE:
            return
        if self.setting is Setting.CEEI and len(set(weights)) != 1:
            raise ValueError("CEEI instances need equal weights")
        total = sum(weights, Fraction(0))
        for item in range(self.num_items):
            for agent in range(self.num_agents):
                if (
                    self.endowments[agent][item] * total
                    != weights[agent] * self.supply(item)
                ):
                    raise ValueError(
                        f"Endowment of agent {agent} in item {item} is not "
                        f"proportional to the agent's weight"
                    )

    @property
    def num_agents(self) -> int:
        return len(self.utilities)

    @property
    def num_items(self) -> int:
        return len(self.endowments[0])

    def supply(self, item: int) -> Fraction:
        """Total endowment of an item."""
        return sum((row[item] for row in self.endowments), Fraction(0))

    @property
    def supplies(self) -> Tuple[Fraction, ...]:
        return tuple(self.supply(item) for item in range(self.num_items))

    def segments(self, agent: int, item: int) -> Tuple[Segment, ...]:
        return self.utilities[agent][item]

    @property
    def total_segments(self) -> int:
        return sum(
            len(segments) for functions in self.utilities for segments in functions
        )

    @property
    def is_normalized(self) -> bool:
        return all(supply == 1 for supply in self.supplies)


def _check_segments(segments: Sequence[Segment], agent: int, item: int):
    """Validate the SPLC shape of a single utility function."""
    where = f"u[{agent}][{item}]"
    if any(segment.length <= 0 for segment in segments):
        raise ValueError(f"{where} has a segment with non-positive length")
    slopes = [segment.slope for segment in segments]
    if any(a <= b for a, b in zip(slopes, slopes[1:])):
        raise ValueError(f"{where} slopes are not strictly decreasing")
    if slopes and slopes[0] > 0 and slopes[-1] < 0:
        raise ValueError(f"{where} mixes positive and negative slopes")


# A utility function spec: a bare slope (linear utility) or a sequence of
# (slope, length) pairs whose final length may be omitted or None.
UtilitySpec = Union[Rational, Sequence[Union[Tuple[Rational, ...], List]]]


def _parse_function(spec: UtilitySpec) -> List[Tuple[Fraction, Optional[Fraction]]]:
    if isinstance(spec, (int, Fraction, str)):
        return [(Fraction(spec), None)]
    pieces = []
    for position, piece in enumerate(spec):
        piece = tuple(piece)
        slope = Fraction(piece[0])
        length = None
        if len(piece) > 1 and piece[1] is not None:
            length = Fraction(piece[1])
        if length is None and position != len(spec) - 1:
            raise ValueError("Only the final segment may omit its length")
        pieces.append((slope, length))
    return pieces


def _pad_functions(
    pieces: Sequence[Sequence[List[Tuple[Fraction, Optional[Fraction]]]]],
    supplies: Sequence[Fraction],
) -> UtilityTable:
    """Build segment tuples, replacing every final length by the padded
    length supply + LAST_SEGMENT_PAD."""
    return tuple(
        tuple(
            tuple(
                Segment(
                    slope,
                    supplies[item] + LAST_SEGMENT_PAD
                    if position == len(function) - 1
                    else length,  # type: ignore
                )
                for position, (slope, length) in enumerate(function)
            )
            for item, function in enumerate(functions)
        )
        for functions in pieces
    )


def weighted_endowments(
    weights: Sequence[Fraction], num_items: int
) -> Tuple[Tuple[Fraction, ...], ...]:
    """Materialize Fisher endowments W_ij = η_i / Σ_k η_k for unit supplies."""
    total = sum(weights, Fraction(0))
    return tuple(
        tuple(Fraction(weight) / total for _ in range(num_items))
        for weight in weights
    )


def make_instance(
    utilities: Sequence[Sequence[UtilitySpec]],
    endowments: Optional[Sequence[Sequence[Rational]]] = None,
    setting: Setting = Setting.EXCHANGE,
    weights: Optional[Sequence[Rational]] = None,
) -> Instance:
    """Convenience constructor.

    args:
        utilities: `utilities[i][j]` is either a single slope (linear
        utility) or a list of `(slope, length)` pairs; the final pair's
        length is implied and may be left out.

        endowments: the matrix W.  May be omitted for Fisher and CEEI
        instances, in which case unit supplies are split according to
        `weights` (equal weights for CEEI).

        setting: the market model.

        weights: per-agent budget weights for Fisher instances.

    returns:
        A validated `Instance` with padded final segments.
    """
    pieces = [[_parse_function(spec) for spec in row] for row in utilities]
    weights_fr = None if weights is None else tuple(Fraction(w) for w in weights)
    if setting is Setting.CEEI and weights_fr is None:
        weights_fr = tuple(Fraction(1) for _ in pieces)
    if endowments is None:
        if weights_fr is None:
            raise ValueError("Exchange instances need an endowment matrix")
        endowment_rows = weighted_endowments(weights_fr, len(pieces[0]))
    else:
        endowment_rows = tuple(
            tuple(Fraction(amount) for amount in row) for row in endowments
        )
    supplies = [
        sum((row[item] for row in endowment_rows), Fraction(0))
        for item in range(len(endowment_rows[0]))
    ]
    return Instance(
        utilities=_pad_functions(pieces, supplies),
        endowments=endowment_rows,
        setting=setting,
        weights=weights_fr,
    )


def normalize(instance: Instance) -> Tuple[Instance, Tuple[Fraction, ...]]:
    """Rescale item units so that every supply is exactly 1.  Slopes are
    multiplied by the supply, lengths and endowments divided by it, and
    final segments re-padded.  The supplies are returned so that prices
    and allocations can be mapped back with `solution.denormalize`."""
    supplies = instance.supplies
    utilities = tuple(
        tuple(
            tuple(
                Segment(
                    segment.slope * supplies[item],
                    1 + LAST_SEGMENT_PAD
                    if position == len(segments) - 1
                    else segment.length / supplies[item],
                )
                for position, segment in enumerate(segments)
            )
            for item, segments in enumerate(functions)
        )
        for functions in instance.utilities
    )
    endowments = tuple(
        tuple(amount / supplies[item] for item, amount in enumerate(row))
        for row in instance.endowments
    )
    normalized = Instance(
        utilities=utilities,
        endowments=endowments,
        setting=instance.setting,
        weights=instance.weights,
    )
    return normalized, supplies


def classify_items(instance: Instance) -> Tuple[ItemClass, ...]:
    """Label every item a good (some agent's first slope is positive) or
    a bad (no agent's first slope is positive)."""
    classes = []
    for item in range(instance.num_items):
        first_slopes = []
        for agent in range(instance.num_agents):
            segments = instance.segments(agent, item)
            if len(segments) == 0:
                raise ValueError(
                    f"Agent {agent} has an empty utility function for item {item}"
                )
            first_slopes.append(segments[0].slope)
        kind = ItemKind.GOOD if max(first_slopes) > 0 else ItemKind.BAD
        classes.append(ItemClass(kind))
    return tuple(classes)


def desire(instance: Instance, item: int) -> Fraction:
    """Maximum total demand for a good at any price: the length of all
    positive-slope segments."""
    return sum(
        (
            segment.length
            for agent in range(instance.num_agents)
            for segment in instance.segments(agent, item)
            if segment.slope > 0
        ),
        Fraction(0),
    )


def indifference(instance: Instance, item: int) -> Fraction:
    """Maximum amount of a bad the agents would absorb at no disutility:
    the length of all zero-slope first segments."""
    return sum(
        (
            instance.segments(agent, item)[0].length
            for agent in range(instance.num_agents)
            if instance.segments(agent, item)[0].slope == 0
        ),
        Fraction(0),
    )


@dataclass(frozen=True)
class PreprocessResult:
    """Outcome of removing items that are priced at zero in every
    equilibrium.  `fixed_allocation[j][i]` holds agent i's per-segment
    allocation of removed item j; `unallocated[j]` is the part of a
    removed good nobody wants (free disposal)."""

    instance: Instance
    reduced: Instance
    classes: Tuple[ItemClass, ...]
    active_items: Tuple[int, ...]
    fixed_allocation: Dict[int, Tuple[Tuple[Fraction, ...], ...]]
    unallocated: Dict[int, Fraction]

    @property
    def removed_items(self) -> Tuple[int, ...]:
        return tuple(sorted(self.fixed_allocation))

    @property
    def reduced_classes(self) -> Tuple[ItemClass, ...]:
        return tuple(self.classes[item] for item in self.active_items)


def _zero_price_good_allocation(
    instance: Instance, item: int
) -> Tuple[Tuple[Tuple[Fraction, ...], ...], Fraction]:
    """Every positive segment is filled; whatever remains goes to
    zero-slope segments in agent order."""
    allocation = []
    remaining = instance.supply(item) - desire(instance, item)
    for agent in range(instance.num_agents):
        amounts = []
        for segment in instance.segments(agent, item):
            if segment.slope > 0:
                amounts.append(segment.length)
            elif segment.slope == 0 and remaining > 0:
                amount = min(remaining, segment.length)
                remaining -= amount
                amounts.append(amount)
            else:
                amounts.append(Fraction(0))
        allocation.append(tuple(amounts))
    return tuple(allocation), remaining


def _zero_price_bad_allocation(
    instance: Instance, item: int
) -> Tuple[Tuple[Fraction, ...], ...]:
    allocation = []
    remaining = instance.supply(item)
    for agent in range(instance.num_agents):
        segments = instance.segments(agent, item)
        amounts = [Fraction(0)] * len(segments)
        if segments[0].slope == 0 and remaining > 0:
            amounts[0] = min(remaining, segments[0].length)
            remaining -= amounts[0]
        allocation.append(tuple(amounts))
    assert remaining == 0, "indifference must cover the supply"
    return tuple(allocation)


def preprocess(instance: Instance) -> PreprocessResult:
    """Remove goods nobody can fully want (desire below supply) and bads
    the agents absorb for free (indifference at least supply).  Both are
    priced at zero; their allocation is fixed here and reinserted into
    the equilibrium of the reduced instance."""
    classes = list(classify_items(instance))
    fixed: Dict[int, Tuple[Tuple[Fraction, ...], ...]] = {}
    unallocated: Dict[int, Fraction] = {}
    for item, item_class in enumerate(classes):
        supply = instance.supply(item)
        if item_class.is_good and desire(instance, item) < supply:
            fixed[item], unallocated[item] = _zero_price_good_allocation(
                instance, item
            )
            classes[item] = ItemClass(ItemKind.GOOD, ItemStatus.ZERO_PRICE_GOOD)
        elif not item_class.is_good and indifference(instance, item) >= supply:
            fixed[item] = _zero_price_bad_allocation(instance, item)
            unallocated[item] = Fraction(0)
            classes[item] = ItemClass(ItemKind.BAD, ItemStatus.ZERO_PRICE_BAD)
    active = tuple(item for item in range(instance.num_items) if item not in fixed)
    reduced = Instance(
        utilities=tuple(
            tuple(functions[item] for item in active)
            for functions in instance.utilities
        ),
        endowments=tuple(
            tuple(row[item] for item in active) for row in instance.endowments
        ),
        setting=instance.setting,
        weights=instance.weights,
    )
    return PreprocessResult(
        instance=instance,
        reduced=reduced,
        classes=tuple(classes),
        active_items=active,
        fixed_allocation=fixed,
        unallocated=unallocated,
    )


@dataclass(frozen=True)
class SufficiencyReport:
    """Whether the sufficient conditions for equilibrium existence hold.
    Both checks are vacuously true for all-bads instances."""

    condition1: bool
    strongly_connected: bool
    all_bads: bool

    @property
    def holds(self) -> bool:
        return self.condition1 and self.strongly_connected


def economy_graph(
    instance: Instance, classes: Optional[Sequence[ItemClass]] = None
) -> nx.DiGraph:
    """Directed graph over agents with an edge i -> k whenever agent i is
    non-satiated for some good that agent k brings."""
    if classes is None:
        classes = classify_items(instance)
    graph = nx.DiGraph()
    graph.add_nodes_from(range(instance.num_agents))
    for agent in range(instance.num_agents):
        for item, item_class in enumerate(classes):
            if not item_class.is_good:
                continue
            if instance.segments(agent, item)[-1].slope <= 0:
                continue
            for owner in range(instance.num_agents):
                if instance.endowments[owner][item] > 0:
                    graph.add_edge(agent, owner)
    return graph


def check_sufficiency(instance: Instance) -> SufficiencyReport:
    """Check that every agent brings some good and some bad, and that the
    economy graph is strongly connected."""
    classes = classify_items(instance)
    if not any(item_class.is_good for item_class in classes):
        return SufficiencyReport(
            condition1=True, strongly_connected=True, all_bads=True
        )
    condition1 = all(
        any(row[j] > 0 for j, c in enumerate(classes) if c.is_good)
        and any(row[j] > 0 for j, c in enumerate(classes) if not c.is_good)
        for row in instance.endowments
    )
    graph = economy_graph(instance, classes)
    return SufficiencyReport(
        condition1=condition1,
        strongly_connected=nx.is_strongly_connected(graph),
        all_bads=False,
    )


def fill_segments(
    instance: Instance, agent: int, item: int, amount: Fraction
) -> Tuple[Fraction, ...]:
    """Distribute an aggregated amount over the segments of u_ij in order.
    The final segment absorbs any excess since it is unbounded."""
    if amount < 0:
        raise ValueError(
            f"Negative amount {amount} of item {item} for agent {agent}"
        )
    segments = instance.segments(agent, item)
    amounts = []
    remaining = Fraction(amount)
    for position, segment in enumerate(segments):
        if position == len(segments) - 1:
            piece = remaining
        else:
            piece = min(remaining, segment.length)
        amounts.append(piece)
        remaining -= piece
    return tuple(amounts)


def utility_of_bundle(
    instance: Instance, agent: int, bundle: Sequence[Fraction]
) -> Fraction:
    """Utility agent `agent` derives from an aggregated per-item bundle."""
    total = Fraction(0)
    for item, amount in enumerate(bundle):
        pieces = fill_segments(instance, agent, item, Fraction(amount))
        total += sum(
            (
                segment.slope * piece
                for segment, piece in zip(instance.segments(agent, item), pieces)
            ),
            Fraction(0),
        )
    return total
