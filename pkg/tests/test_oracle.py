# %%
""" Test suite for oracle.py """

from fractions import Fraction

import numpy as np
import pytest

from mixed_manna import harness, oracle
from mixed_manna.instance import Instance, Setting, make_instance
from mixed_manna.solution import solve_instance
from mixed_manna.verify import verify_equilibrium


@pytest.fixture(name="good_and_bad")
def fixture_good_and_bad() -> Instance:
    return make_instance(
        [[1, -2], [1, -3]],
        [["1/2", "1/2"], ["1/2", "1/2"]],
    )


@pytest.fixture(name="chores")
def fixture_chores() -> Instance:
    return make_instance([[-10, -2, -1], [-1, -100, -100]], setting=Setting.CEEI)


def _fractions(*values):
    return tuple(Fraction(v) for v in values)


def test_enumerate_good_and_bad(good_and_bad):
    """The list holds the equilibrium with prices proportional to
    (2, -4), and nothing the verifier would refuse."""
    result = oracle.enumerate_equilibria(good_and_bad)
    assert not result.degenerate_family
    keys = [equilibrium.key() for equilibrium in result.equilibria]
    expected = (
        _fractions("1/2", -1),
        (_fractions(1, "3/4"), _fractions(0, "1/4")),
    )
    assert expected in keys
    for equilibrium in result.equilibria:
        assert verify_equilibrium(good_and_bad, equilibrium).overall
    assert result.configurations > 0


def test_enumerate_chores(chores):
    """Both the equilibrium at (-20/13, -4/13, -2/13) and the one at
    (-3, -2, -1) are found, and the pivoting solver's answer is among
    them."""
    result = oracle.enumerate_equilibria(chores)
    keys = {equilibrium.key() for equilibrium in result.equilibria}
    assert (
        _fractions(-1, "-1/5", "-1/10"),
        (_fractions("7/20", 1, 1), _fractions("13/20", 0, 0)),
    ) in keys
    assert (
        _fractions(-1, "-2/3", "-1/3"),
        (_fractions(0, 1, 1), _fractions(1, 0, 0)),
    ) in keys
    solved = solve_instance(chores)
    assert solved.equilibrium is not None
    assert solved.equilibrium.key() in keys


def test_degenerate_family():
    """Identical agents facing identically priced bads can split them in
    any proportion."""
    inst = make_instance([[-1, -1], [-1, -1]], [[1, 0], [0, 1]])
    result = oracle.enumerate_equilibria(inst)
    assert result.degenerate_family
    assert oracle.count_equilibria(inst) is None


def test_count_single_bad():
    inst = make_instance([[-1]], [[1]])
    assert oracle.count_equilibria(inst) == 1


def test_only_fixed_items():
    inst = make_instance([[[(0, 2), (-1, None)]]], [[1]])
    result = oracle.enumerate_equilibria(inst)
    assert result.count == 1
    assert result.equilibria[0].prices == (0,)


def test_cap(good_and_bad):
    with pytest.raises(oracle.OracleCapExceeded):
        oracle.enumerate_equilibria(good_and_bad, cap=3)


def test_function_options():
    inst = make_instance(
        [[[(-1, "1/2"), (-2, None)], -1], [-3, -1]],
        [["1/2", "1/2"], ["1/2", "1/2"]],
    )
    assert oracle.function_options(inst, 0, 0, is_good=False) == [
        (0, False),
        (1, False),
        (0, True),
        (1, True),
    ]
    # agent 0 dislikes the good outright
    unliked = make_instance([[-1, -1], [1, -1]], [["1/2", "1/2"], ["1/2", "1/2"]])
    assert oracle.function_options(unliked, 0, 0, is_good=True) == [(0, False)]


def test_configuration_labels():
    config = oracle.Configuration((((1, True),),))
    assert config.label(0, 0, 0) is oracle.SegmentLabel.FORCED
    assert config.label(0, 0, 1) is oracle.SegmentLabel.FLEXIBLE
    assert config.label(0, 0, 2) is oracle.SegmentLabel.UNDESIRABLE


def test_solve_exact():
    def array(rows):
        return np.array([[Fraction(v) for v in row] for row in rows], dtype=object)

    solved = oracle.solve_exact(
        array([[2, 1], [1, -1]]), np.array(_fractions(3, 0), dtype=object)
    )
    assert solved is not None
    values, underdetermined = solved
    assert list(values) == [1, 1]
    assert not underdetermined
    assert (
        oracle.solve_exact(
            array([[1, 1], [1, 1]]), np.array(_fractions(1, 2), dtype=object)
        )
        is None
    )
    free = oracle.solve_exact(array([[1, 1]]), np.array(_fractions(1), dtype=object))
    assert free is not None
    assert list(free[0]) == [1, 0]
    assert free[1]


@pytest.mark.parametrize("trial", range(3))
def test_solver_agrees_with_oracle(trial):
    """On small random instances the pivoting solver returns one of the
    enumerated equilibria."""
    config = harness.BenchConfig(n=2, m=2, segments=2, trials=3, seed=11)
    inst = harness.gen_random_instance(config, trial)
    result = oracle.enumerate_equilibria(inst)
    solved = solve_instance(inst)
    assert solved.equilibrium is not None
    assert solved.equilibrium.key() in {e.key() for e in result.equilibria}


@pytest.mark.slow
@pytest.mark.parametrize("trial", range(100))
def test_linear_instances_agree_with_oracle(trial):
    """On 2x2 linear all-bads instances the solver's answer is enumerated
    and a nondegenerate instance has an odd number of equilibria."""
    config = harness.BenchConfig(n=2, m=2, segments=1, trials=100, seed=0)
    inst = harness.gen_random_instance(config, trial)
    result = oracle.enumerate_equilibria(inst, progress=False)
    solved = solve_instance(inst)
    assert solved.equilibrium is not None
    assert solved.equilibrium.key() in {e.key() for e in result.equilibria}
    if not result.degenerate_family:
        assert result.count % 2 == 1
