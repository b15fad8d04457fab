# %%
""" Test suite for lcp.py """

from fractions import Fraction

import pytest

from mixed_manna import lcp
from mixed_manna.instance import Instance, make_instance
from mixed_manna.lcp import VariableLabel


@pytest.fixture(name="good_and_bad")
def fixture_good_and_bad() -> Instance:
    """One good and one bad, two agents with equal endowments."""
    return make_instance(
        [[1, -2], [1, -3]],
        [["1/2", "1/2"], ["1/2", "1/2"]],
    )


@pytest.fixture(name="single_bad")
def fixture_single_bad() -> Instance:
    """One agent who must take the whole of one bad."""
    return make_instance([[-1]], [[1]])


def test_choose_constants(good_and_bad, single_bad):
    """R = (P / U_min)(2 + B_max) with P = 1."""
    assert lcp.choose_constants(good_and_bad) == (1, 3)
    assert lcp.choose_constants(single_bad) == (1, 3)
    halves = make_instance([["-1/2", -1]], [[1, 1]])
    assert lcp.choose_constants(halves) == (1, 8)


def test_choose_constants_all_zero():
    inst = make_instance([[0]], [[1]])
    with pytest.raises(ValueError):
        lcp.choose_constants(inst)


def test_good_and_bad_layout(good_and_bad):
    """Rows are budgets, spending, then MBB/MPB and capacity rows, one
    of each per segment."""
    system = lcp.build_mixed_lcp(good_and_bad, Fraction(1), Fraction(3))
    assert system.size == 12
    assert [str(label) for label in system.labels[:4]] == [
        "r[0]",
        "r[1]",
        "p[0]",
        "p[1]",
    ]
    assert str(system.labels[4]) == "f[0,0,0]"
    assert str(system.labels[8]) == "s[0,0,0]"
    assert system.P == 1 and system.R == 3
    # bad spending rows are never perturbed
    assert system.deltas[1] == 0
    assert 1 < system.deltas[0] < Fraction(3, 2)


def test_bad_segment_rows(single_bad):
    """q of an MPB row is D R - P; budget rows carry -P W for bads."""
    system = lcp.build_mixed_lcp(single_bad, Fraction(1), Fraction(4))
    mpb = system.index(VariableLabel.spending(0, 0, 0))
    budget = system.index(VariableLabel.inverse_bpb(0))
    spending = system.index(VariableLabel.price(0))
    capacity = system.index(VariableLabel.supplement(0, 0, 0))
    assert system.q[mpb] == 3
    assert system.covering[mpb] == 0
    assert system.q[budget] == -1
    assert system.covering[budget] == 1
    assert system.q[spending] == 1
    assert system.covering[spending] == 0
    assert system.q[capacity] == Fraction(11, 10)
    two = make_instance([[-2]], [[1]])
    system = lcp.build_mixed_lcp(two, Fraction(1), Fraction(4))
    assert system.q[system.index(VariableLabel.spending(0, 0, 0))] == 7


def test_zero_disutility_row_is_covered():
    """A free segment of a bad gives an MPB row with q < 0, which needs
    a z coefficient."""
    inst = make_instance(
        [[[(0, "1/2"), (-1, None)]], [-1]], [["1/2"], ["1/2"]]
    )
    system = lcp.build_mixed_lcp(inst, Fraction(1), Fraction(5))
    row = system.index(VariableLabel.spending(0, 0, 0))
    assert system.q[row] == -1
    assert system.covering[row] == 1


def test_unliked_goods_get_no_segments():
    """Agent 1 dislikes the good, so it spends nothing on it."""
    inst = make_instance([[1, -1], [-1, -1]], [["1/2", "1/2"], ["1/2", "1/2"]])
    system = lcp.build_mixed_lcp(inst, Fraction(1), Fraction(3))
    assert VariableLabel.spending(1, 0, 0) not in system
    assert VariableLabel.spending(0, 0, 0) in system
    assert system.size == 2 + 2 + 2 * 3


def test_build_requires_normalized_and_preprocessed():
    with pytest.raises(ValueError):
        lcp.build_mixed_lcp(make_instance([[-1]], [[2]]), Fraction(1), Fraction(3))
    inst = make_instance([[[(0, 2), (-1, None)], -1]], [[1, 1]])
    with pytest.raises(ValueError):
        lcp.build_mixed_lcp(inst, Fraction(1), Fraction(3))


def test_draw_deltas_seeded():
    """Deltas are reproducible per seed and lie in (1, 1 + 1/m)."""
    goods = [True, False, True]
    first = lcp.draw_deltas(goods, seed=7)
    assert first == lcp.draw_deltas(goods, seed=7)
    assert first[1] == 0
    for delta in (first[0], first[2]):
        assert 1 < delta < 1 + Fraction(1, 3)


def test_upper_bounds(good_and_bad):
    system = lcp.build_mixed_lcp(good_and_bad, Fraction(1), Fraction(3))
    bounds = system.upper_bounds()
    assert bounds == {0: 3, 1: 3, 2: 1, 3: 1}


def test_check_lcp_solution(single_bad):
    """The unique equilibrium p = -1, x = 1 sits at p = 0, f = 1 and
    r = R - 1."""
    system = lcp.build_mixed_lcp(single_bad, Fraction(1), Fraction(3))
    solution = {
        VariableLabel.inverse_bpb(0): Fraction(2),
        VariableLabel.price(0): Fraction(0),
        VariableLabel.spending(0, 0, 0): Fraction(1),
    }
    assert lcp.check_lcp_solution(system, solution)
    solution[VariableLabel.spending(0, 0, 0)] = Fraction(1, 2)
    assert not lcp.check_lcp_solution(system, solution)
    # y = 0 is feasible only once z covers the budget row
    assert not lcp.check_lcp_solution(system, {})
    assert lcp.check_lcp_solution(system, {}, z=Fraction(1))


def test_from_rows():
    system = lcp.LcpSystem.from_rows([[-1]], [-1], [1])
    assert system.size == 1
    assert str(system.labels[0]) == "y[0]"
    assert system.upper_bounds() == {}
