""" Independent checks that prices and an allocation form an exact or
approximate competitive equilibrium, fairness checks, and re-encoding of
an equilibrium as an LCP solution.

Optimality of a bundle is decided through the agent's common level
lambda = 1 / r: a good segment is forced when its bang per buck exceeds
lambda and undesirable when it falls short, a bad segment is forced when
its pain per buck is below lambda and undesirable when above.  An
allocation is optimal iff some lambda >= 0 is consistent with every
segment and the budget balances. """

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from itertools import groupby
from typing import Dict, List, Optional, Sequence, Tuple

from mixed_manna.instance import (
    Instance,
    PreprocessResult,
    Segment,
    Setting,
    classify_items,
    preprocess,
    utility_of_bundle,
)
from mixed_manna.lcp import LcpSystem, VariableLabel
from mixed_manna.solution import Equilibrium, budgets_at, canonical, rescale


class SegmentLabel(Enum):
    FORCED = "forced"
    FLEXIBLE = "flexible"
    UNDESIRABLE = "undesirable"


class MalformedAllocationError(ValueError):
    """The allocation is not a valid per-segment allocation at all."""


@dataclass(frozen=True)
class SegmentClass:
    """Segments of one agent sharing a bang-per-buck (goods) or
    pain-per-buck (bads) ratio; members are (item, segment) pairs."""

    ratio: Fraction
    segments: Tuple[Tuple[int, int], ...]
    label: SegmentLabel


@dataclass(frozen=True)
class PartitionReport:
    """Equivalence classes of an agent's segments: goods by decreasing
    bang per buck, bads by increasing pain per buck.  `threshold` is the
    level lambda the labels were derived from, if one exists."""

    agent: int
    goods: Tuple[SegmentClass, ...]
    bads: Tuple[SegmentClass, ...]
    threshold: Optional[Fraction]


@dataclass(frozen=True)
class ThresholdInterval:
    """Closed interval of feasible levels lambda; `upper` None is +inf."""

    lower: Fraction
    upper: Optional[Fraction]

    @property
    def empty(self) -> bool:
        return self.upper is not None and self.lower > self.upper

    def contains(self, value: Fraction) -> bool:
        return value >= self.lower and (self.upper is None or value <= self.upper)


def _is_last(instance: Instance, agent: int, item: int, k: int) -> bool:
    return k == len(instance.segments(agent, item)) - 1


def threshold_interval(
    instance: Instance,
    agent: int,
    prices: Sequence[Fraction],
    allocation: Sequence[Sequence[Fraction]],
) -> ThresholdInterval:
    """Levels lambda >= 0 consistent with every segment of the agent's
    allocation.  Zero-price items do not constrain lambda."""
    lower: Fraction = Fraction(0)
    upper: Optional[Fraction] = None

    def cap(value: Fraction):
        nonlocal upper
        upper = value if upper is None else min(upper, value)

    for item, price in enumerate(prices):
        if price == 0:
            continue
        is_good = price > 0
        for k, segment in enumerate(instance.segments(agent, item)):
            amount = allocation[item][k]
            ratio = segment.slope / price
            full = amount == segment.length and not _is_last(instance, agent, item, k)
            if amount > 0 and not full:
                lower = max(lower, ratio)
                cap(ratio)
            elif (amount == 0) == is_good:
                # unconsumed good or fully consumed bad
                lower = max(lower, ratio)
            else:
                cap(ratio)
    return ThresholdInterval(lower, upper)


def demand_threshold(
    instance: Instance, agent: int, prices: Sequence[Fraction]
) -> Optional[Fraction]:
    """Smallest level lambda at which the agent's optimal spending can
    exactly match its budget, or None if no level can."""
    budget = budgets_at(instance, prices)[agent]
    pieces: List[Tuple[Segment, Fraction, bool]] = [
        (segment, price, k == len(instance.segments(agent, item)) - 1)
        for item, price in enumerate(prices)
        if price != 0
        for k, segment in enumerate(instance.segments(agent, item))
    ]
    ratios = sorted(
        {s.slope / p for s, p, _ in pieces if s.slope / p >= 0} | {Fraction(0)}
    )
    candidates = []
    for position, ratio in enumerate(ratios):
        candidates.append(ratio)
        following = ratios[position + 1] if position + 1 < len(ratios) else ratio + 2
        candidates.append((ratio + following) / 2)
    for level in candidates:
        low, high = Fraction(0), Fraction(0)
        low_unbounded = high_unbounded = False
        feasible = True
        for segment, price, last in pieces:
            value = segment.slope - level * price
            spend = segment.length * price
            if value > 0:
                if last:
                    # forced onto an unbounded segment: spending diverges
                    feasible = False
                    break
                low += spend
                high += spend
            elif value == 0:
                if not last:
                    low += min(spend, Fraction(0))
                    high += max(spend, Fraction(0))
                elif price > 0:
                    high_unbounded = True
                else:
                    low_unbounded = True
        if not feasible:
            continue
        if (low_unbounded or low <= budget) and (high_unbounded or budget <= high):
            return level
    return None


def _group(
    entries: List[Tuple[Fraction, int, int]], descending: bool
) -> List[Tuple[Fraction, Tuple[Tuple[int, int], ...]]]:
    entries = sorted(
        entries,
        key=lambda entry: (-entry[0] if descending else entry[0], entry[1], entry[2]),
    )
    return [
        (ratio, tuple((item, k) for _, item, k in members))
        for ratio, members in groupby(entries, key=lambda entry: entry[0])
    ]


def partition_segments(
    instance: Instance,
    prices: Sequence[Fraction],
    agent: int,
    allocation: Optional[Sequence[Sequence[Fraction]]] = None,
) -> PartitionReport:
    """Group an agent's segments into equivalence classes of equal bang
    per buck (goods) or pain per buck (bads) and label them.

    With an `allocation` of the agent's segments, classes before the first
    one not fully consumed are forced, that one is flexible, and the rest
    undesirable.  Without one, labels compare each class with the demand
    threshold implied by the prices."""
    classes = preprocess(instance).classes
    for item, price in enumerate(prices):
        if price == 0 and classes[item].is_active:
            raise ValueError(f"Item {item} is active but has price zero")
    goods, bads = [], []
    for item, price in enumerate(prices):
        if price == 0:
            continue
        for k, segment in enumerate(instance.segments(agent, item)):
            (goods if price > 0 else bads).append((segment.slope / price, item, k))
    good_groups = _group(goods, descending=True)
    bad_groups = _group(bads, descending=False)

    if allocation is not None:
        interval = threshold_interval(instance, agent, prices, allocation)
        threshold = None if interval.empty else interval.lower

        def label_side(groups):
            labelled, seen_flexible = [], False
            for ratio, members in groups:
                full = all(
                    allocation[item][k] == instance.segments(agent, item)[k].length
                    and not _is_last(instance, agent, item, k)
                    for item, k in members
                )
                if seen_flexible:
                    label = SegmentLabel.UNDESIRABLE
                elif full:
                    label = SegmentLabel.FORCED
                else:
                    label, seen_flexible = SegmentLabel.FLEXIBLE, True
                labelled.append(SegmentClass(ratio, members, label))
            return tuple(labelled)

        return PartitionReport(
            agent, label_side(good_groups), label_side(bad_groups), threshold
        )

    threshold = demand_threshold(instance, agent, prices)

    def label(ratio: Fraction, good: bool) -> SegmentLabel:
        if threshold is None:
            return SegmentLabel.UNDESIRABLE
        if ratio == threshold:
            return SegmentLabel.FLEXIBLE
        return (
            SegmentLabel.FORCED
            if (ratio > threshold) == good
            else SegmentLabel.UNDESIRABLE
        )

    return PartitionReport(
        agent,
        tuple(SegmentClass(r, m, label(r, True)) for r, m in good_groups),
        tuple(SegmentClass(r, m, label(r, False)) for r, m in bad_groups),
        threshold,
    )


@dataclass(frozen=True)
class VerificationReport:
    """Per-condition outcome of `verify_equilibrium`."""

    optimal_bundles: Tuple[bool, ...]
    budgets_balanced: Tuple[bool, ...]
    clearing: Tuple[bool, ...]
    partitions: Tuple[PartitionReport, ...]
    epsilon: Fraction

    @property
    def overall(self) -> bool:
        return all(self.optimal_bundles) and all(self.clearing)

    def failures(self) -> List[str]:
        messages = []
        for agent, ok in enumerate(self.optimal_bundles):
            if not ok:
                reason = "budget" if not self.budgets_balanced[agent] else "bundle"
                messages.append(f"agent {agent}: not an optimal bundle ({reason})")
        for item, ok in enumerate(self.clearing):
            if not ok:
                messages.append(f"item {item}: market does not clear")
        return messages


def check_well_formed(instance: Instance, equilibrium: Equilibrium):
    """Raise `MalformedAllocationError` unless every per-segment amount is
    non-negative, within its segment and filled in order."""
    if (
        equilibrium.num_agents != instance.num_agents
        or equilibrium.num_items != instance.num_items
    ):
        raise MalformedAllocationError("Equilibrium does not match instance size")
    for agent, row in enumerate(equilibrium.allocation):
        for item, amounts in enumerate(row):
            segments = instance.segments(agent, item)
            where = f"agent {agent}, item {item}"
            if len(amounts) != len(segments):
                raise MalformedAllocationError(f"{where}: wrong number of segments")
            for k, (amount, segment) in enumerate(zip(amounts, segments)):
                if amount < 0:
                    raise MalformedAllocationError(f"{where}: negative amount")
                if k < len(segments) - 1 and amount > segment.length:
                    raise MalformedAllocationError(
                        f"{where}: segment {k} holds {amount} > {segment.length}"
                    )
                if k > 0 and amount > 0 and amounts[k - 1] != segments[k - 1].length:
                    raise MalformedAllocationError(
                        f"{where}: segment {k} used before segment {k - 1} is full"
                    )


def _zero_price_ok(
    instance: Instance, agent: int, prices: Sequence[Fraction], row
) -> bool:
    """At price zero, liked segments must be full and disliked ones empty."""
    for item, price in enumerate(prices):
        if price != 0:
            continue
        for k, segment in enumerate(instance.segments(agent, item)):
            amount = row[item][k]
            if segment.slope > 0 and (
                _is_last(instance, agent, item, k) or amount != segment.length
            ):
                return False
            if segment.slope < 0 and amount != 0:
                return False
    return True


def verify_equilibrium(
    instance: Instance,
    equilibrium: Equilibrium,
    epsilon: Fraction = Fraction(0),
) -> VerificationReport:
    """Check optimal bundles (always exactly) and market clearing (exactly
    when `epsilon` is 0, else within a relative `epsilon` of supply).
    Zero-price goods may be undersold.

    Raises `MalformedAllocationError` for allocations that are not valid
    segment allocations."""
    epsilon = Fraction(epsilon)
    if epsilon < 0:
        raise ValueError("epsilon must be non-negative")
    check_well_formed(instance, equilibrium)
    prices = equilibrium.prices
    budgets = budgets_at(instance, prices)
    optimal, balanced, partitions = [], [], []
    for agent, row in enumerate(equilibrium.allocation):
        spent = sum(
            (
                prices[item] * sum(amounts, Fraction(0))
                for item, amounts in enumerate(row)
            ),
            Fraction(0),
        )
        balanced.append(spent == budgets[agent])
        interval = threshold_interval(instance, agent, prices, row)
        optimal.append(
            balanced[-1]
            and not interval.empty
            and _zero_price_ok(instance, agent, prices, row)
        )
        partitions.append(_partition_or_none(instance, prices, agent, row))
    classes = classify_items(instance)
    clearing = []
    for item, (total, supply) in enumerate(
        zip(_item_totals(equilibrium), instance.supplies)
    ):
        if prices[item] == 0 and classes[item].is_good:
            clearing.append(total <= supply)
        elif epsilon == 0:
            clearing.append(total == supply)
        else:
            clearing.append(abs(total - supply) <= epsilon * supply)
    return VerificationReport(
        optimal_bundles=tuple(optimal),
        budgets_balanced=tuple(balanced),
        clearing=tuple(clearing),
        partitions=tuple(p for p in partitions if p is not None),
        epsilon=epsilon,
    )


def _partition_or_none(instance, prices, agent, row) -> Optional[PartitionReport]:
    try:
        return partition_segments(instance, prices, agent, row)
    except ValueError:
        # an active item at price zero; the bundle checks already fail
        return None


def _item_totals(equilibrium: Equilibrium) -> Tuple[Fraction, ...]:
    bundles = equilibrium.bundles()
    return tuple(
        sum((row[item] for row in bundles), Fraction(0))
        for item in range(equilibrium.num_items)
    )


@dataclass(frozen=True)
class FairnessReport:
    envy_free: bool
    proportional: bool
    envious_pairs: Tuple[Tuple[int, int], ...]


def check_fairness(instance: Instance, equilibrium: Equilibrium) -> FairnessReport:
    """Weighted envy-freeness u_i(x_i)/η_i >= u_i(x_k)/η_k and weighted
    proportionality u_i(x_i) >= η_i/Σ η · u_i(supply)."""
    weights = instance.weights
    if weights is None:
        if instance.setting is not Setting.CEEI:
            raise ValueError(
                "Fairness checks need agent weights; exchange instances have none"
            )
        weights = tuple(Fraction(1) for _ in range(instance.num_agents))
    total_weight = sum(weights, Fraction(0))
    bundles = equilibrium.bundles()
    envious = []
    proportional = True
    for agent in range(instance.num_agents):
        own = utility_of_bundle(instance, agent, bundles[agent])
        for other in range(instance.num_agents):
            if other == agent:
                continue
            theirs = utility_of_bundle(instance, agent, bundles[other])
            if own / weights[agent] < theirs / weights[other]:
                envious.append((agent, other))
        share = weights[agent] / total_weight
        if own < share * utility_of_bundle(instance, agent, instance.supplies):
            proportional = False
    return FairnessReport(
        envy_free=not envious,
        proportional=proportional,
        envious_pairs=tuple(envious),
    )


def encode_vertex(
    equilibrium: Equilibrium, preprocessed: PreprocessResult, lcp: LcpSystem
) -> Dict[VariableLabel, Fraction]:
    """Re-encode an equilibrium of `preprocessed.instance` as a solution of
    the reduced instance's LCP (with z = 0): p_j = P - |p*_j| at a scale
    where max |p*| = P, f = x |p*|, r_i = R - 1/lambda_i, and s_ijk the
    surplus of forced segments."""
    assert lcp.P is not None and lcp.R is not None, "LCP lacks market constants"
    instance = preprocessed.instance
    scaled = rescale(canonical(equilibrium), lcp.P)
    prices = scaled.prices
    values: Dict[VariableLabel, Fraction] = {}
    for agent, row in enumerate(scaled.allocation):
        interval = threshold_interval(instance, agent, prices, row)
        if interval.empty:
            raise ValueError(f"Agent {agent} does not hold an optimal bundle")
        level = max(interval.lower, 1 / lcp.R)
        if interval.upper is not None and level > interval.upper:
            level = interval.upper
        if level <= 0:
            raise ValueError(f"Agent {agent} has no positive level")
        values[VariableLabel.inverse_bpb(agent)] = lcp.R - 1 / level
        for reduced_item, item in enumerate(preprocessed.active_items):
            magnitude = abs(prices[item])
            for k, segment in enumerate(instance.segments(agent, item)):
                spending = VariableLabel.spending(agent, reduced_item, k)
                if spending not in lcp:
                    continue
                amount = row[item][k]
                values[spending] = amount * magnitude
                if amount == segment.length and not _is_last(instance, agent, item, k):
                    surplus = (
                        segment.slope / level - magnitude
                        if prices[item] > 0
                        else magnitude - segment.magnitude / level
                    )
                    values[VariableLabel.supplement(agent, reduced_item, k)] = surplus
    for reduced_item, item in enumerate(preprocessed.active_items):
        values[VariableLabel.price(reduced_item)] = lcp.P - abs(prices[item])
    return values
