""" Construction of the augmented linear complementarity problem (LCP)
whose solutions with z = 0 correspond to the competitive equilibria of a
preprocessed mixed-manna instance.

Variables are prices p_j, spendings f_ijk, inverse bang-per-buck levels
r_i and supplements s_ijk, all measured against the constants P and R
(the equilibrium price of item j is P - p_j in absolute value).  Row a of
the system is paired with variable a. """

from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from mixed_manna.instance import Instance, classify_items, preprocess

# epsilon_j = k / (m * PERTURBATION_DENOMINATOR), k in 1..denominator-1
PERTURBATION_DENOMINATOR = 2**16


class VarKind(Enum):
    """Kinds of LCP variables."""

    PRICE = "p"
    SPENDING = "f"
    INVERSE_BPB = "r"
    SUPPLEMENT = "s"
    Z = "z"
    # Variables of hand-built systems without market meaning
    GENERIC = "y"


@dataclass(frozen=True)
class VariableLabel:
    """Name of an LCP variable (and of the constraint paired with it)."""

    kind: VarKind
    agent: Optional[int] = None
    item: Optional[int] = None
    segment: Optional[int] = None

    def __str__(self) -> str:
        if self.kind is VarKind.PRICE:
            return f"p[{self.item}]"
        if self.kind is VarKind.INVERSE_BPB:
            return f"r[{self.agent}]"
        if self.kind is VarKind.Z:
            return "z"
        if self.kind is VarKind.GENERIC:
            return f"y[{self.item}]"
        return f"{self.kind.value}[{self.agent},{self.item},{self.segment}]"

    @classmethod
    def price(cls, item: int) -> "VariableLabel":
        return cls(VarKind.PRICE, item=item)

    @classmethod
    def spending(cls, agent: int, item: int, segment: int) -> "VariableLabel":
        return cls(VarKind.SPENDING, agent, item, segment)

    @classmethod
    def inverse_bpb(cls, agent: int) -> "VariableLabel":
        return cls(VarKind.INVERSE_BPB, agent=agent)

    @classmethod
    def supplement(cls, agent: int, item: int, segment: int) -> "VariableLabel":
        return cls(VarKind.SUPPLEMENT, agent, item, segment)


Z_LABEL = VariableLabel(VarKind.Z)


@dataclass(eq=False)
class LcpSystem:
    """Find y >= 0 with A y - c z <= q, complementary to the slack, and
    z = 0.  `matrix`, `q` and `covering` are numpy object arrays of
    Fractions.  `deltas[j]` is the covering coefficient of item j's
    spending row (0 for bads)."""

    matrix: np.ndarray
    q: np.ndarray
    covering: np.ndarray
    labels: Tuple[VariableLabel, ...]
    P: Optional[Fraction] = None
    R: Optional[Fraction] = None
    deltas: Tuple[Fraction, ...] = ()
    _index: Dict[VariableLabel, int] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        size = len(self.labels)
        assert self.matrix.shape == (size, size), "A must be square"
        assert len(self.q) == size and len(self.covering) == size
        self._index = {label: row for row, label in enumerate(self.labels)}
        assert len(self._index) == size, "labels must be distinct"

    @property
    def size(self) -> int:
        return len(self.labels)

    def index(self, label: VariableLabel) -> int:
        return self._index[label]

    def __contains__(self, label: VariableLabel) -> bool:
        return label in self._index

    def upper_bounds(self) -> Dict[int, Fraction]:
        """Strict upper bounds that hold along the whole pivoting path:
        p_j < P and r_i < R."""
        bounds = {}
        for row, label in enumerate(self.labels):
            if label.kind is VarKind.PRICE and self.P is not None:
                bounds[row] = self.P
            elif label.kind is VarKind.INVERSE_BPB and self.R is not None:
                bounds[row] = self.R
        return bounds

    @classmethod
    def from_rows(
        cls,
        matrix: Sequence[Sequence],
        q: Sequence,
        covering: Sequence,
    ) -> "LcpSystem":
        """Build a system without market structure from nested lists."""
        size = len(q)
        return cls(
            matrix=_fraction_array([[Fraction(a) for a in row] for row in matrix]),
            q=_fraction_vector(q),
            covering=_fraction_vector(covering),
            labels=tuple(VariableLabel(VarKind.GENERIC, item=k) for k in range(size)),
        )


def _fraction_array(rows: List[List[Fraction]]) -> np.ndarray:
    array = np.empty((len(rows), len(rows[0]) if rows else 0), dtype=object)
    for row, values in enumerate(rows):
        for col, value in enumerate(values):
            array[row, col] = value
    return array


def _fraction_vector(values: Sequence) -> np.ndarray:
    vector = np.empty(len(values), dtype=object)
    for position, value in enumerate(values):
        vector[position] = Fraction(value)
    return vector


def choose_constants(instance: Instance) -> Tuple[Fraction, Fraction]:
    """Pick P = 1 and R = (P / U_min) * (2 + B_max), where U_min is the
    smallest non-zero slope magnitude and B_max the largest total
    endowment of an agent."""
    price_bound = Fraction(1)
    magnitudes = [
        segment.magnitude
        for functions in instance.utilities
        for segments in functions
        for segment in segments
        if segment.slope != 0
    ]
    if not magnitudes:
        raise ValueError("All utility slopes are zero")
    u_min = min(magnitudes)
    b_max = max(sum(row, Fraction(0)) for row in instance.endowments)
    return price_bound, price_bound / u_min * (2 + b_max)


def active_segments(
    instance: Instance, goods: Sequence[bool]
) -> List[Tuple[int, int, int]]:
    """Segments that get spending variables: all of them, except goods an
    agent does not like at all (first slope <= 0)."""
    segments = []
    for agent in range(instance.num_agents):
        for item in range(instance.num_items):
            functions = instance.segments(agent, item)
            if goods[item] and functions[0].slope <= 0:
                continue
            segments.extend((agent, item, k) for k in range(len(functions)))
    return segments


def draw_deltas(goods: Sequence[bool], seed: int) -> Tuple[Fraction, ...]:
    """Covering coefficients of the spending rows: 1 + epsilon_j for goods
    with epsilon_j drawn in (0, 1/m), 0 for bads."""
    rng = np.random.default_rng(seed)
    num_items = len(goods)
    deltas = []
    for is_good in goods:
        draw = int(rng.integers(1, PERTURBATION_DENOMINATOR))
        if is_good:
            deltas.append(1 + Fraction(draw, num_items * PERTURBATION_DENOMINATOR))
        else:
            deltas.append(Fraction(0))
    return tuple(deltas)


def build_mixed_lcp(
    instance: Instance,
    P: Fraction,
    R: Fraction,
    seed: int = 0,
) -> LcpSystem:
    """Build the augmented LCP of a normalized, preprocessed instance.

    args:
        instance: market with unit supplies and no zero-price items.

        P: price bound; equilibrium prices are (P - p_j) in magnitude.

        R: bound on the inverse bang-per-buck variables.

        seed: fixes the perturbation of the goods' spending rows.

    returns:
        The `LcpSystem`, rows ordered as budgets r_i, spending rows p_j,
        then one MBB/MPB row f_ijk and one capacity row s_ijk per active
        segment.
    """
    if not instance.is_normalized:
        raise ValueError("Normalize the instance before building its LCP")
    if preprocess(instance).removed_items:
        raise ValueError(
            "Instance has items priced at zero in every equilibrium; "
            "preprocess it first"
        )
    goods = [item_class.is_good for item_class in classify_items(instance)]
    segments = active_segments(instance, goods)
    labels = (
        [VariableLabel.inverse_bpb(i) for i in range(instance.num_agents)]
        + [VariableLabel.price(j) for j in range(instance.num_items)]
        + [VariableLabel.spending(*segment) for segment in segments]
        + [VariableLabel.supplement(*segment) for segment in segments]
    )
    index = {label: row for row, label in enumerate(labels)}
    size = len(labels)
    zero = Fraction(0)
    matrix = np.full((size, size), zero, dtype=object)
    q = np.full(size, zero, dtype=object)
    covering = np.full(size, zero, dtype=object)
    deltas = draw_deltas(goods, seed)
    sign = [Fraction(1) if is_good else Fraction(-1) for is_good in goods]

    # Budget rows: spending minus earnings at most the budget (plus z)
    for agent in range(instance.num_agents):
        row = index[VariableLabel.inverse_bpb(agent)]
        for item in range(instance.num_items):
            matrix[row, index[VariableLabel.price(item)]] = (
                sign[item] * instance.endowments[agent][item]
            )
        q[row] = P * sum(
            (sign[j] * w for j, w in enumerate(instance.endowments[agent])), zero
        )
        covering[row] = Fraction(1)
    for agent, item, k in segments:
        budget_row = index[VariableLabel.inverse_bpb(agent)]
        matrix[budget_row, index[VariableLabel.spending(agent, item, k)]] = sign[item]

    # Spending rows: money spent on (earned from) an item matches its price
    for item in range(instance.num_items):
        row = index[VariableLabel.price(item)]
        matrix[row, row] = -sign[item]
        q[row] = -P if goods[item] else P
        covering[row] = deltas[item]
    for agent, item, k in segments:
        spending_row = index[VariableLabel.price(item)]
        matrix[spending_row, index[VariableLabel.spending(agent, item, k)]] = (
            Fraction(-1) if goods[item] else Fraction(1)
        )

    for agent, item, k in segments:
        segment = instance.segments(agent, item)[k]
        mbb = index[VariableLabel.spending(agent, item, k)]
        capacity = index[VariableLabel.supplement(agent, item, k)]
        r_col = index[VariableLabel.inverse_bpb(agent)]
        p_col = index[VariableLabel.price(item)]
        # Best bang per buck for goods, minimum pain per buck for bads
        matrix[mbb, capacity] = Fraction(-1)
        if goods[item]:
            matrix[mbb, r_col] = -segment.slope
            matrix[mbb, p_col] = Fraction(1)
            q[mbb] = P - segment.slope * R
            covering[mbb] = Fraction(1)
        else:
            matrix[mbb, r_col] = segment.magnitude
            matrix[mbb, p_col] = Fraction(-1)
            q[mbb] = segment.magnitude * R - P
            # zero-disutility segments have a negative right hand side
            covering[mbb] = Fraction(1) if q[mbb] < 0 else zero
        # Segment capacity
        matrix[capacity, mbb] = Fraction(1)
        matrix[capacity, p_col] = segment.length
        q[capacity] = segment.length * P

    return LcpSystem(
        matrix=matrix,
        q=q,
        covering=covering,
        labels=tuple(labels),
        P=P,
        R=R,
        deltas=deltas,
    )


def check_lcp_solution(
    lcp: LcpSystem, values: Mapping[VariableLabel, Fraction], z: Fraction = Fraction(0)
) -> bool:
    """Exact check that `values` (missing labels are zero) satisfy
    y >= 0, A y - c z <= q and complementarity."""
    y = np.array(
        [Fraction(values.get(label, 0)) for label in lcp.labels], dtype=object
    )
    if any(value < 0 for value in y) or z < 0:
        return False
    slack = lcp.q - lcp.matrix.dot(y) + lcp.covering * z
    if any(value < 0 for value in slack):
        return False
    return all(a * b == 0 for a, b in zip(y, slack))
