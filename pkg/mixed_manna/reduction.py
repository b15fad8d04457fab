""" Reduction of 2-player games to all-bads exchange markets, conversion of
exchange instances with small endowments into CEEI instances, and
recovery of well-supported Nash strategies from equilibrium prices.

For an n x n game the market has 2n + 2 bads: bads 0..n-1 price the row
player's strategies, bads n..2n-1 the column player's, bad 2n absorbs
payoff differences and bad 2n+1 is a sink.  After scaling the smallest
price to 1 every price lies in [1, 2], and strategy s is played with
weight proportional to 2 - |p_s|. """

from dataclasses import dataclass
from fractions import Fraction
from itertools import permutations
from typing import List, Optional, Sequence, Tuple

from mixed_manna.instance import Instance, Rational, Setting, make_instance
from mixed_manna.solution import Equilibrium, from_bundles

REDUCTION_H = Fraction(10)


@dataclass(frozen=True)
class BimatrixGame:
    """Payoff matrices of the row and column player, entries in [0, 1]."""

    row_payoffs: Tuple[Tuple[Fraction, ...], ...]
    column_payoffs: Tuple[Tuple[Fraction, ...], ...]

    def __post_init__(self):
        size = len(self.row_payoffs)
        if size == 0:
            raise ValueError("A game needs at least one strategy")
        for name, matrix in (("R", self.row_payoffs), ("C", self.column_payoffs)):
            if len(matrix) != size or any(len(row) != size for row in matrix):
                raise ValueError(f"{name} is not a {size}x{size} matrix")
            for s, row in enumerate(matrix):
                for t, value in enumerate(row):
                    if not 0 <= value <= 1:
                        raise ValueError(
                            f"{name}[{s}][{t}] = {value} is outside [0, 1]"
                        )

    @property
    def n(self) -> int:
        return len(self.row_payoffs)

    @classmethod
    def from_lists(
        cls,
        row_payoffs: Sequence[Sequence[Rational]],
        column_payoffs: Sequence[Sequence[Rational]],
    ) -> "BimatrixGame":
        return cls(
            tuple(tuple(Fraction(v) for v in row) for row in row_payoffs),
            tuple(tuple(Fraction(v) for v in row) for row in column_payoffs),
        )


@dataclass(frozen=True)
class MixedStrategy:
    """A probability vector over a player's strategies."""

    probabilities: Tuple[Fraction, ...]

    def __post_init__(self):
        if any(p < 0 for p in self.probabilities):
            raise ValueError("Probabilities must be non-negative")
        if sum(self.probabilities, Fraction(0)) != 1:
            raise ValueError("Probabilities must sum to 1")

    def __getitem__(self, strategy: int) -> Fraction:
        return self.probabilities[strategy]

    def __len__(self) -> int:
        return len(self.probabilities)

    @classmethod
    def normalized(cls, weights: Sequence[Fraction]) -> "MixedStrategy":
        total = sum(weights, Fraction(0))
        if total == 0:
            raise ValueError("Cannot normalize an all-zero weight vector")
        return cls(tuple(Fraction(w) / total for w in weights))


def _pos(value: Fraction) -> Fraction:
    return max(value, Fraction(0))


def _two_piece(first_slope: Fraction, first_length: Fraction, h: Fraction) -> list:
    """Disutility `first_slope` for `first_length` units, then H; a
    zero-length first piece is left out."""
    if first_length == 0:
        return [(-h, None)]
    return [(-first_slope, first_length), (-h, None)]


def _player_agents(
    n: int,
    diffs: Sequence[Fraction],
    own_item: int,
    opponent_items: Sequence[int],
    h: Fraction,
) -> Tuple[List[list], List[List[Fraction]]]:
    """One agent of N_R (or N_C) given the payoff differences
    r_k = R[s'][k] - R[s][k] (or c_k), the bad of its own strategy s and
    the bads of the opponent's strategies."""
    m = 2 * n + 2
    deficit, sink = 2 * n, 2 * n + 1
    total = sum(diffs, Fraction(0))
    utilities: list = [[(-h, None)] for _ in range(m)]
    endowment = [Fraction(0)] * m
    endowment[own_item] = Fraction(1, n**4)
    utilities[own_item] = _two_piece(Fraction(1), Fraction(1, n**4), h)
    for k, item in enumerate(opponent_items):
        endowment[item] = _pos(diffs[k]) / n**6
        utilities[item] = _two_piece(Fraction(1, 3), _pos(-diffs[k]) / n**6, h)
    endowment[deficit] = _pos(-total) / n**6
    utilities[deficit] = _two_piece(Fraction(1, 3), _pos(total) / n**6, h)
    utilities[sink] = [(Fraction(-3), None)]
    return utilities, endowment


def reduce_game_to_exchange(game: BimatrixGame, h: Fraction = REDUCTION_H) -> Instance:
    """Build the all-bads exchange market whose equilibria encode the
    well-supported Nash equilibria of `game`.

    Agents come in four families, in this order: price-regulating agents
    for every ordered pair of distinct bads, one deficit agent per
    strategy bad, and one agent per ordered pair of distinct strategies
    for each player.  That is 6n^2 + 6n + 2 agents in total."""
    n = game.n
    m = 2 * n + 2
    deficit = 2 * n
    utilities: List[list] = []
    endowments: List[List[Fraction]] = []

    for first, second in permutations(range(m), 2):
        row: list = [-h] * m
        row[first], row[second] = Fraction(-1), Fraction(-2)
        endowment = [Fraction(0)] * m
        endowment[first] = Fraction(1, n)
        utilities.append(row)
        endowments.append(endowment)

    for item in range(2 * n):
        row = [-h] * m
        row[item] = Fraction(-1)
        endowment = [Fraction(0)] * m
        endowment[deficit] = Fraction(1, n**8)
        utilities.append(row)
        endowments.append(endowment)

    alpha_items = list(range(n))
    beta_items = list(range(n, 2 * n))
    for s, other in permutations(range(n), 2):
        diffs = [game.row_payoffs[other][k] - game.row_payoffs[s][k] for k in range(n)]
        agent_utilities, endowment = _player_agents(n, diffs, s, beta_items, h)
        utilities.append(agent_utilities)
        endowments.append(endowment)
    for s, other in permutations(range(n), 2):
        diffs = [
            game.column_payoffs[k][other] - game.column_payoffs[k][s] for k in range(n)
        ]
        agent_utilities, endowment = _player_agents(n, diffs, n + s, alpha_items, h)
        utilities.append(agent_utilities)
        endowments.append(endowment)

    return make_instance(utilities, endowments, Setting.EXCHANGE)


def extract_strategies(
    prices: Sequence[Fraction], n: int
) -> Tuple[MixedStrategy, MixedStrategy]:
    """Read (alpha, beta) off the prices of a reduced market: after
    scaling the smallest absolute price to 1, u_s = 2 - |p_s| and
    v_s = 2 - |p_(n+s)|, normalized."""
    if len(prices) < 2 * n:
        raise ValueError(f"Need at least {2 * n} prices, got {len(prices)}")
    magnitudes = [abs(Fraction(p)) for p in prices]
    smallest = min(magnitudes)
    if smallest == 0:
        raise ValueError("Prices of the reduced market must be nonzero")
    scaled = [value / smallest for value in magnitudes]
    u = [2 - value for value in scaled[:n]]
    v = [2 - value for value in scaled[n : 2 * n]]
    for name, weights in (("u", u), ("v", v)):
        if any(not 0 <= w <= 1 for w in weights):
            raise ValueError(
                f"{name} = {[str(w) for w in weights]} leaves [0, 1]; the "
                f"prices are not an equilibrium of a reduced market"
            )
        if all(w == 0 for w in weights):
            raise ValueError(f"{name} is identically zero")
    return MixedStrategy.normalized(u), MixedStrategy.normalized(v)


def _payoffs_against(
    matrix, strategy: MixedStrategy, transpose: bool
) -> List[Fraction]:
    """Expected payoff of each pure strategy against `strategy`; with
    `transpose` the player chooses columns."""
    n = len(strategy)
    if transpose:
        matrix = [[matrix[k][s] for k in range(n)] for s in range(n)]
    return [
        sum((matrix[s][k] * strategy[k] for k in range(n)), Fraction(0))
        for s in range(n)
    ]


def _supported(
    payoffs: Sequence[Fraction], strategy: MixedStrategy, eps: Fraction
) -> bool:
    best = max(payoffs)
    for s, payoff in enumerate(payoffs):
        gap = best - payoff
        if gap > 0 and gap >= eps and strategy[s] != 0:
            return False
    return True


def check_well_supported(
    game: BimatrixGame,
    alpha: MixedStrategy,
    beta: MixedStrategy,
    eps: Rational = 0,
) -> bool:
    """Whether every strategy played with positive probability is within
    `eps` of a best response, for both players."""
    eps = Fraction(eps)
    if len(alpha) != game.n or len(beta) != game.n:
        raise ValueError("Strategies do not match the game size")
    row = _payoffs_against(game.row_payoffs, beta, transpose=False)
    column = _payoffs_against(game.column_payoffs, alpha, transpose=True)
    return _supported(row, alpha, eps) and _supported(column, beta, eps)


def exchange_to_fisher(
    instance: Instance, share: Optional[Rational] = None
) -> Instance:
    """Convert an all-bads exchange instance into a CEEI instance in which
    every agent owns `share` of every bad (default: the largest
    endowment).  Each function u_ij gains a zero-disutility first segment
    of length share - W_ij, so equilibria correspond through
    x~_ij = x_ij + share - W_ij with unchanged prices."""
    largest = max(w for row in instance.endowments for w in row)
    share = largest if share is None else Fraction(share)
    if largest > share:
        raise ValueError(f"An endowment of {largest} exceeds the share {share}")
    utilities = []
    for agent, functions in enumerate(instance.utilities):
        row = []
        for item, segments in enumerate(functions):
            if segments[0].slope > 0:
                raise ValueError(f"Item {item} is a good for agent {agent}")
            extra = share - instance.endowments[agent][item]
            pieces: list = [(s.slope, s.length) for s in segments]
            pieces[-1] = (pieces[-1][0], None)
            if extra > 0:
                if pieces[0][0] == 0 and pieces[0][1] is not None:
                    pieces[0] = (Fraction(0), pieces[0][1] + extra)
                elif pieces[0][0] != 0:
                    pieces.insert(0, (Fraction(0), extra))
            row.append(pieces)
        utilities.append(row)
    endowments = [[share] * instance.num_items for _ in range(instance.num_agents)]
    return make_instance(utilities, endowments, Setting.CEEI)


def _added_amount(
    exchange: Instance, fisher: Instance, agent: int, item: int
) -> Fraction:
    return fisher.endowments[agent][item] - exchange.endowments[agent][item]


def exchange_equilibrium_to_fisher(
    exchange: Instance, fisher: Instance, equilibrium: Equilibrium
) -> Equilibrium:
    """Map an equilibrium of the exchange instance to the CEEI instance
    built from it by `exchange_to_fisher`."""
    bundles = [
        [
            amount + _added_amount(exchange, fisher, agent, item)
            for item, amount in enumerate(row)
        ]
        for agent, row in enumerate(equilibrium.bundles())
    ]
    return from_bundles(fisher, equilibrium.prices, bundles)


def fisher_equilibrium_to_exchange(
    exchange: Instance, fisher: Instance, equilibrium: Equilibrium
) -> Equilibrium:
    """Map an equilibrium of the CEEI instance back to the exchange
    instance: x_ij = x~_ij - (share - W_ij), prices unchanged."""
    bundles = []
    for agent, row in enumerate(equilibrium.bundles()):
        amounts = []
        for item, amount in enumerate(row):
            original = amount - _added_amount(exchange, fisher, agent, item)
            if original < 0:
                raise ValueError(
                    f"Agent {agent} holds less of item {item} than the added "
                    f"zero-disutility segment; not an equilibrium of the CEEI instance"
                )
            amounts.append(original)
        bundles.append(amounts)
    return from_bundles(exchange, equilibrium.prices, bundles)
