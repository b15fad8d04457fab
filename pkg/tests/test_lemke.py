# %%
""" Test suite for lemke.py """

from fractions import Fraction

import pytest

from mixed_manna import lemke
from mixed_manna.instance import make_instance
from mixed_manna.lcp import LcpSystem, VariableLabel, Z_LABEL, build_mixed_lcp
from mixed_manna.lemke import TerminationKind


def test_one_by_one_solution():
    """-y <= -1 - z: z enters at 1, then y replaces it."""
    result = lemke.run(LcpSystem.from_rows([[-1]], [-1], [1]))
    assert result.status.is_solution
    assert result.iterations == 2
    vertex = result.status.vertex
    assert vertex is not None
    assert list(vertex.values()) == [1]
    assert Z_LABEL not in vertex


def test_one_by_one_ray():
    """y <= -1 + z has no solution with z = 0; y is unbounded."""
    result = lemke.run(LcpSystem.from_rows([[1]], [-1], [1]))
    assert result.status.kind is TerminationKind.SECONDARY_RAY
    assert result.iterations == 1
    assert result.status.direction is not None
    assert result.status.direction["y[0]"] == 1


def test_trivial_system_needs_no_pivots():
    """With q >= 0 the origin is already a solution."""
    result = lemke.run(
        LcpSystem.from_rows([[1, 0], [0, 1]], [1, 2], [1, 1])
    )
    assert result.status.is_solution
    assert result.iterations == 0
    assert result.trace == ()


def test_primary_ray_tie():
    """Two rows need the same z; only the lexicographic start accepts it."""
    system = LcpSystem.from_rows([[-1, 0], [0, -1]], [-1, -1], [1, 1])
    with pytest.raises(lemke.DegeneracyError) as info:
        lemke.init_primary_ray(system)
    assert set(info.value.witness) == {"y[0]", "y[1]"}
    tableau = lemke.init_primary_ray(system, lexicographic=True)
    assert tableau.z_value == 1
    assert tableau.entering is not None


def test_primary_ray_needs_covering():
    system = LcpSystem.from_rows([[1]], [-1], [0])
    with pytest.raises(ValueError):
        lemke.init_primary_ray(system)


def test_single_bad_path():
    """The one-agent one-bad market: z enters on the budget row, r rises
    to its MPB bound, then spending pushes z out."""
    inst = make_instance([[-1]], [[1]])
    system = build_mixed_lcp(inst, Fraction(1), Fraction(3))
    result = lemke.run(system)
    assert result.status.is_solution
    assert result.iterations == 3
    assert [entry.entering for entry in result.trace] == ["z", "r[0]", "f[0,0,0]"]
    assert result.trace[-1].leaving == "z"
    assert result.trace[-1].z == 0
    vertex = result.status.vertex
    assert vertex is not None
    assert vertex[VariableLabel.spending(0, 0, 0)] == 1
    assert vertex[VariableLabel.inverse_bpb(0)] == 2
    assert vertex.get(VariableLabel.price(0), Fraction(0)) == 0


def test_step_after_solution_raises():
    system = LcpSystem.from_rows([[-1]], [-1], [1])
    tableau = lemke.init_primary_ray(system)
    tableau, event = lemke.step(tableau)
    assert event is lemke.PivotEvent.VERTEX
    assert tableau.entering is None
    with pytest.raises(ValueError):
        lemke.step(tableau)


def test_iteration_limit():
    """The limit counts the initial z pivot."""
    result = lemke.run(LcpSystem.from_rows([[-1]], [-1], [1]), max_iters=1)
    assert result.status.kind is TerminationKind.ITERATION_LIMIT
    assert result.status.count == 1


def test_check_vertex_flags_negative_values():
    tableau = lemke.Tableau(LcpSystem.from_rows([[1]], [-1], [1]))
    with pytest.raises(lemke.PathInvariantError):
        tableau.check_vertex()


def test_check_vertex_flags_price_bound():
    """A price variable at P means the item is priced at zero."""
    inst = make_instance([[-1]], [[1]])
    system = build_mixed_lcp(inst, Fraction(1), Fraction(3))
    tableau = lemke.Tableau(system)
    price_row = system.index(VariableLabel.price(0))
    tableau.pivot(price_row, price_row)
    assert tableau.rhs[price_row] == 1
    assert all(value >= 0 for value in tableau.rhs)
    with pytest.raises(lemke.PathInvariantError):
        tableau.check_vertex()


def test_check_vertex_reuses_bounds(monkeypatch):
    """Bounds are read from the system once, when the tableau is built."""
    inst = make_instance([[-1]], [[1]])
    system = build_mixed_lcp(inst, Fraction(1), Fraction(3))
    tableau = lemke.Tableau(system)
    assert tableau.bounds == system.upper_bounds()

    def no_bounds(self):
        raise RuntimeError("bounds recomputed")

    monkeypatch.setattr(LcpSystem, "upper_bounds", no_bounds)
    price_row = system.index(VariableLabel.price(0))
    tableau.pivot(price_row, price_row)
    with pytest.raises(lemke.PathInvariantError):
        tableau.check_vertex()


def test_trace_entry_format():
    entry = lemke.TraceEntry(3, "f[0,1,0]", "v:p[1]", Fraction(1, 2))
    assert str(entry) == "3, f[0,1,0], v:p[1], 1/2"
