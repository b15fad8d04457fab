""" Plain-text formats for instances, equilibria, games and LCP dumps.

All numbers are exact rationals written as integers or "p/q".  Text after
"#" is a comment.  An instance file looks like:

    setting exchange
    agents 2
    items 2
    u 0 0 : 1 1/2 1/4       # slope, length, ..., final slope
    u 0 1 : -1
    ...
    w 0 : 1 0
    w 1 : 0 1
    weights : 1 1           # optional; required for fisher

Endowment lines may be left out of Fisher and CEEI files, in which case
unit supplies are split according to the weights. """

from dataclasses import dataclass
from fractions import Fraction
import re
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

from mixed_manna.instance import Instance, Setting, make_instance
from mixed_manna.lcp import LcpSystem
from mixed_manna.reduction import BimatrixGame
from mixed_manna.solution import Equilibrium, from_bundles


class ParseError(ValueError):
    """Malformed input, located by 1-based line and column."""

    def __init__(self, message: str, line: int, column: int = 1):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


@dataclass(frozen=True)
class Token:
    text: str
    line: int
    column: int

    def rational(self) -> Fraction:
        try:
            return Fraction(self.text)
        except (ValueError, ZeroDivisionError) as error:
            raise ParseError(
                f"expected a rational, got {self.text!r}", self.line, self.column
            ) from error

    def integer(self) -> int:
        try:
            return int(self.text)
        except ValueError as error:
            raise ParseError(
                f"expected an integer, got {self.text!r}", self.line, self.column
            ) from error


def tokenize(text: str) -> Iterator[List[Token]]:
    """Yield the tokens of every non-empty line, comments stripped."""
    for number, raw in enumerate(text.splitlines(), start=1):
        content = raw.split("#", 1)[0]
        tokens = [
            Token(match.group(), number, match.start() + 1)
            for match in re.finditer(r"\S+", content)
        ]
        if tokens:
            yield tokens


def _split_colon(tokens: List[Token]) -> Tuple[List[Token], List[Token]]:
    """Split `key args : values` at the colon."""
    for position, token in enumerate(tokens):
        if token.text == ":":
            return tokens[:position], tokens[position + 1 :]
    raise ParseError("expected ':'", tokens[0].line, tokens[-1].column)


def _fmt(value: Fraction) -> str:
    return str(Fraction(value))


def _index(token: Token, bound: int, what: str) -> int:
    value = token.integer()
    if not 0 <= value < bound:
        raise ParseError(
            f"{what} index {value} out of range 0..{bound - 1}",
            token.line,
            token.column,
        )
    return value


def _header(
    lines: List[List[Token]],
) -> Tuple[Dict[str, Token], List[List[Token]]]:
    """Pull out single-valued `key value` lines; the rest are returned."""
    header: Dict[str, Token] = {}
    rest = []
    for tokens in lines:
        if tokens[0].text in ("setting", "agents", "items") and len(tokens) == 2:
            if tokens[0].text in header:
                raise ParseError(
                    f"duplicate {tokens[0].text!r}",
                    tokens[0].line,
                    tokens[0].column,
                )
            header[tokens[0].text] = tokens[1]
        else:
            rest.append(tokens)
    return header, rest


def _require(header: Dict[str, Token], key: str, last_line: int) -> Token:
    if key not in header:
        raise ParseError(f"missing {key!r} line", last_line)
    return header[key]


def parse_instance(text: str) -> Instance:
    lines = list(tokenize(text))
    if not lines:
        raise ParseError("empty instance", 1)
    last_line = lines[-1][0].line
    header, rest = _header(lines)
    setting_token = header.get("setting")
    try:
        setting = Setting(setting_token.text) if setting_token else Setting.EXCHANGE
    except ValueError as error:
        assert setting_token is not None
        raise ParseError(
            f"unknown setting {setting_token.text!r}",
            setting_token.line,
            setting_token.column,
        ) from error
    num_agents = _require(header, "agents", last_line).integer()
    num_items = _require(header, "items", last_line).integer()
    if num_agents < 1 or num_items < 0:
        raise ParseError(
            "need at least one agent and no negative counts", header["agents"].line
        )

    utilities: List[List[Optional[list]]] = [
        [None] * num_items for _ in range(num_agents)
    ]
    endowments: List[Optional[List[Fraction]]] = [None] * num_agents
    weights: Optional[List[Fraction]] = None
    for tokens in rest:
        keyword = tokens[0]
        keys, values = _split_colon(tokens)
        if keyword.text == "u":
            if len(keys) != 3:
                raise ParseError(
                    "expected 'u agent item :'", keyword.line, keyword.column
                )
            agent = _index(keys[1], num_agents, "agent")
            item = _index(keys[2], num_items, "item")
            if len(values) % 2 == 0:
                raise ParseError(
                    "expected slope length pairs and a final slope",
                    keyword.line,
                    (values[-1] if values else keyword).column,
                )
            numbers = [token.rational() for token in values]
            pieces = [
                (numbers[k], numbers[k + 1] if k + 1 < len(numbers) else None)
                for k in range(0, len(numbers), 2)
            ]
            utilities[agent][item] = pieces
        elif keyword.text == "w":
            if len(keys) != 2:
                raise ParseError("expected 'w agent :'", keyword.line, keyword.column)
            agent = _index(keys[1], num_agents, "agent")
            if len(values) != num_items:
                raise ParseError(
                    f"expected {num_items} endowments", keyword.line, keyword.column
                )
            endowments[agent] = [token.rational() for token in values]
        elif keyword.text == "weights":
            if len(values) != num_agents:
                raise ParseError(
                    f"expected {num_agents} weights", keyword.line, keyword.column
                )
            weights = [token.rational() for token in values]
        else:
            raise ParseError(
                f"unknown keyword {keyword.text!r}", keyword.line, keyword.column
            )

    for agent, row in enumerate(utilities):
        for item, pieces in enumerate(row):
            if pieces is None:
                raise ParseError(f"missing 'u {agent} {item}' line", last_line)
    if all(row is None for row in endowments) and setting is not Setting.EXCHANGE:
        matrix = None
    else:
        for agent, row in enumerate(endowments):
            if row is None:
                raise ParseError(f"missing 'w {agent}' line", last_line)
        matrix = endowments
    try:
        return make_instance(utilities, matrix, setting, weights)  # type: ignore
    except ValueError as error:
        raise ParseError(str(error), last_line) from error


def format_instance(instance: Instance) -> str:
    lines = [
        f"setting {instance.setting.value}",
        f"agents {instance.num_agents}",
        f"items {instance.num_items}",
    ]
    for agent in range(instance.num_agents):
        for item in range(instance.num_items):
            segments = instance.segments(agent, item)
            numbers = []
            for position, segment in enumerate(segments):
                numbers.append(_fmt(segment.slope))
                if position < len(segments) - 1:
                    numbers.append(_fmt(segment.length))
            lines.append(f"u {agent} {item} : {' '.join(numbers)}")
    for agent, row in enumerate(instance.endowments):
        lines.append(f"w {agent} : {' '.join(_fmt(w) for w in row)}")
    if instance.weights is not None:
        lines.append(f"weights : {' '.join(_fmt(w) for w in instance.weights)}")
    return "\n".join(lines) + "\n"


def _render(value: Fraction, decimal: bool) -> str:
    return f"{float(value):.6g}" if decimal else _fmt(value)


def format_equilibrium(equilibrium: Equilibrium, decimal: bool = False) -> str:
    """Render prices, budgets and aggregated bundles.  The decimal form is
    for reading only; it does not parse back exactly."""

    def row(values: Sequence[Fraction]) -> str:
        return " ".join(_render(v, decimal) for v in values)

    lines = [
        f"agents {equilibrium.num_agents}",
        f"items {equilibrium.num_items}",
        f"prices : {row(equilibrium.prices)}",
        f"budgets : {row(equilibrium.budgets)}",
    ]
    for agent, bundle in enumerate(equilibrium.bundles()):
        lines.append(f"x {agent} : {row(bundle)}")
    lines.append(f"unallocated : {row(equilibrium.unallocated)}")
    return "\n".join(lines) + "\n"


def parse_prices(text: str) -> Tuple[Fraction, ...]:
    """Prices from an equilibrium file, or from a file holding nothing
    but whitespace-separated prices."""
    lines = list(tokenize(text))
    for tokens in lines:
        if tokens[0].text == "prices":
            return tuple(token.rational() for token in _split_colon(tokens)[1])
    return tuple(token.rational() for tokens in lines for token in tokens)


def parse_equilibrium(text: str, instance: Instance) -> Equilibrium:
    """Read an equilibrium file for `instance`; bundles are spread over the
    segments in order and budgets recomputed from the endowments."""
    lines = list(tokenize(text))
    if not lines:
        raise ParseError("empty equilibrium", 1)
    last_line = lines[-1][0].line
    header, rest = _header(lines)
    for key, expected in (
        ("agents", instance.num_agents),
        ("items", instance.num_items),
    ):
        token = _require(header, key, last_line)
        if token.integer() != expected:
            raise ParseError(
                f"{key} is {token.text} but the instance has {expected}",
                token.line,
                token.column,
            )
    prices: Optional[List[Fraction]] = None
    unallocated: Optional[List[Fraction]] = None
    bundles: List[Optional[List[Fraction]]] = [None] * instance.num_agents
    for tokens in rest:
        keyword = tokens[0]
        keys, values = _split_colon(tokens)
        numbers = [token.rational() for token in values]
        if keyword.text in ("prices", "budgets", "unallocated", "x"):
            size = (
                instance.num_agents
                if keyword.text == "budgets"
                else instance.num_items
            )
            if len(numbers) != size:
                raise ParseError(
                    f"expected {size} values", keyword.line, keyword.column
                )
        if keyword.text == "prices":
            prices = numbers
        elif keyword.text == "unallocated":
            unallocated = numbers
        elif keyword.text == "x":
            if len(keys) != 2:
                raise ParseError(
                    "expected 'x agent :'", keyword.line, keyword.column
                )
            bundles[_index(keys[1], instance.num_agents, "agent")] = numbers
        elif keyword.text != "budgets":
            raise ParseError(
                f"unknown keyword {keyword.text!r}", keyword.line, keyword.column
            )
    if prices is None:
        raise ParseError("missing 'prices' line", last_line)
    for agent, bundle in enumerate(bundles):
        if bundle is None:
            raise ParseError(f"missing 'x {agent}' line", last_line)
    try:
        return from_bundles(instance, prices, bundles, unallocated)  # type: ignore
    except ValueError as error:
        raise ParseError(str(error), last_line) from error


def parse_game(text: str) -> BimatrixGame:
    """A game file holds n, then the n rows of R, then the n rows of C."""
    lines = list(tokenize(text))
    if not lines:
        raise ParseError("empty game", 1)
    first = lines[0]
    if len(first) != 1:
        raise ParseError("expected the strategy count alone", first[0].line)
    n = first[0].integer()
    if n < 1 or len(lines) != 1 + 2 * n:
        raise ParseError(
            f"expected {2 * n} matrix rows after n", first[0].line, first[0].column
        )
    rows = []
    for tokens in lines[1:]:
        if len(tokens) != n:
            raise ParseError(
                f"expected {n} entries", tokens[0].line, tokens[-1].column
            )
        rows.append([token.rational() for token in tokens])
    try:
        return BimatrixGame.from_lists(rows[:n], rows[n:])
    except ValueError as error:
        raise ParseError(str(error), lines[-1][0].line) from error


def format_game(game: BimatrixGame) -> str:
    lines = [str(game.n)]
    for matrix in (game.row_payoffs, game.column_payoffs):
        lines.extend(" ".join(_fmt(v) for v in row) for row in matrix)
    return "\n".join(lines) + "\n"


def format_lcp(lcp: LcpSystem) -> str:
    """Sparse dump of an LCP for debugging: labels, the nonzero entries of
    A, then q and c."""
    lines = [f"# lcp rows={lcp.size} P={lcp.P} R={lcp.R}"]
    lines.extend(f"label {row} {label}" for row, label in enumerate(lcp.labels))
    for row in range(lcp.size):
        for col in range(lcp.size):
            if lcp.matrix[row, col] != 0:
                lines.append(f"A {row} {col} {_fmt(lcp.matrix[row, col])}")
    lines.extend(f"q {row} {_fmt(value)}" for row, value in enumerate(lcp.q))
    lines.extend(
        f"c {row} {_fmt(value)}" for row, value in enumerate(lcp.covering)
    )
    return "\n".join(lines) + "\n"
