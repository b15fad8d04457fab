# %%
""" Test suite for formats.py """

from fractions import Fraction

import pytest

from mixed_manna import formats
from mixed_manna.instance import Instance, Setting, make_instance
from mixed_manna.lcp import build_mixed_lcp
from mixed_manna.reduction import BimatrixGame
from mixed_manna.solution import canonical, from_bundles

GOOD_AND_BAD_TEXT = """\
# one good, one bad
setting exchange
agents 2
items 2
u 0 0 : 1
u 0 1 : -2
u 1 0 : 1
u 1 1 : -3
w 0 : 1/2 1/2
w 1 : 1/2 1/2
"""


@pytest.fixture(name="good_and_bad")
def fixture_good_and_bad() -> Instance:
    return make_instance(
        [[1, -2], [1, -3]],
        [["1/2", "1/2"], ["1/2", "1/2"]],
    )


def test_parse_instance(good_and_bad):
    assert formats.parse_instance(GOOD_AND_BAD_TEXT) == good_and_bad


def test_format_instance_parses_back():
    """Multi-segment functions and weights survive a write and a read."""
    inst = make_instance(
        [[[(-1, "1/3"), (-4, None)], -2], [-1, [(0, "1/2"), (-1, None)]]],
        setting=Setting.CEEI,
    )
    text = formats.format_instance(inst)
    assert "u 0 0 : -1 1/3 -4" in text
    assert "weights : 1 1" in text
    assert formats.parse_instance(text) == inst


def test_parse_ceei_without_endowments():
    text = "setting ceei\nagents 2\nitems 1\nu 0 0 : -1\nu 1 0 : -2\n"
    inst = formats.parse_instance(text)
    assert inst.endowments == ((Fraction(1, 2),), (Fraction(1, 2),))


@pytest.mark.parametrize(
    "text, line, column",
    [
        ("agents 1\nitems 1\nu 0 0 : abc\nw 0 : 1\n", 3, 9),
        ("agents 1\nitems 1\nu 0 0 : -1 1\nw 0 : 1\n", 3, 12),
        ("agents 1\nitems 1\nu 0 3 : -1\nw 0 : 1\n", 3, 5),
        ("agents 1\nitems 1\nv 0 0 : -1\nw 0 : 1\n", 3, 1),
        ("setting barter\nagents 1\nitems 1\nu 0 0 : -1\nw 0 : 1\n", 1, 9),
        ("agents 1\nitems 1\nw 0 : 1\n", 3, 1),
    ],
)
def test_parse_instance_errors(text, line, column):
    with pytest.raises(formats.ParseError) as info:
        formats.parse_instance(text)
    assert (info.value.line, info.value.column) == (line, column)
    assert str(info.value).startswith(f"line {line}, column {column}:")


def test_parse_instance_rejects_invalid_market():
    """Shape errors from the instance constructor surface as parse errors."""
    with pytest.raises(formats.ParseError):
        formats.parse_instance("agents 1\nitems 1\nu 0 0 : -1\nw 0 : 0\n")
    with pytest.raises(formats.ParseError):
        formats.parse_instance("")


def test_format_equilibrium(good_and_bad):
    equilibrium = canonical(
        from_bundles(good_and_bad, [2, -4], [[1, "3/4"], [0, "1/4"]])
    )
    text = formats.format_equilibrium(equilibrium)
    assert text.splitlines() == [
        "agents 2",
        "items 2",
        "prices : 1/2 -1",
        "budgets : -1/4 -1/4",
        "x 0 : 1 3/4",
        "x 1 : 0 1/4",
        "unallocated : 0 0",
    ]
    decimal = formats.format_equilibrium(equilibrium, decimal=True)
    assert "prices : 0.5 -1" in decimal
    assert "x 0 : 1 0.75" in decimal
    parsed = formats.parse_equilibrium(text, good_and_bad)
    assert parsed.key() == equilibrium.key()


def test_parse_equilibrium_errors(good_and_bad):
    with pytest.raises(formats.ParseError):
        formats.parse_equilibrium(
            "agents 3\nitems 2\nprices : 1 -1\n", good_and_bad
        )
    with pytest.raises(formats.ParseError):
        formats.parse_equilibrium(
            "agents 2\nitems 2\nprices : 1 -1\nx 0 : 1 1\n", good_and_bad
        )
    with pytest.raises(formats.ParseError):
        formats.parse_equilibrium(
            "agents 2\nitems 2\nprices : 1\nx 0 : 1 1\nx 1 : 0 0\n", good_and_bad
        )


def test_parse_prices():
    assert formats.parse_prices("1/2 -1\n") == (Fraction(1, 2), Fraction(-1))
    assert formats.parse_prices("agents 1\nitems 2\nprices : 3 -2/3\n") == (
        Fraction(3),
        Fraction(-2, 3),
    )


def test_games():
    text = "2\n1 0\n0 1\n0 1\n1 0\n"
    game = formats.parse_game(text)
    assert game == BimatrixGame.from_lists([[1, 0], [0, 1]], [[0, 1], [1, 0]])
    assert formats.format_game(game) == text
    with pytest.raises(formats.ParseError):
        formats.parse_game("2\n1 0\n0 1\n0 1\n")
    with pytest.raises(formats.ParseError):
        formats.parse_game("1\n2\n0\n")
    with pytest.raises(formats.ParseError):
        formats.parse_game("2\n1 0 1\n0 1\n0 1\n1 0\n")


def test_format_lcp():
    lcp = build_mixed_lcp(make_instance([[-1]], [[1]]), Fraction(1), Fraction(3))
    lines = formats.format_lcp(lcp).splitlines()
    assert lines[0] == "# lcp rows=4 P=1 R=3"
    assert "label 0 r[0]" in lines
    assert all(
        line.split()[0] in ("#", "label", "A", "q", "c") for line in lines
    )
    assert sum(line.startswith("q ") for line in lines) == 4
