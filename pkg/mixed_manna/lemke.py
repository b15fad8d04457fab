""" Lemke's complementary pivoting scheme on exact rational tableaux.

The tableau holds the system A y + v - c z = q with columns ordered
y_0..y_{N-1}, v_0..v_{N-1}, z.  The slack columns always hold the inverse
of the current basis, which the lexicographic ratio test reads. """

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Dict, FrozenSet, List, Optional, Set, Tuple

import numpy as np

from mixed_manna.lcp import LcpSystem, VariableLabel, Z_LABEL

DEFAULT_ITERS_PER_ROW = 50


class DegeneracyError(Exception):
    """Raised when a pivot choice cannot be made uniquely."""

    def __init__(self, message: str, witness: Tuple[str, ...]):
        super().__init__(f"{message}: {', '.join(witness)}")
        self.witness = witness


class PathInvariantError(AssertionError):
    """A visited vertex broke a property the pivoting path must keep."""


class TerminationKind(Enum):
    SOLUTION = "solution"
    SECONDARY_RAY = "secondary_ray"
    ITERATION_LIMIT = "iteration_limit"
    DEGENERACY = "degeneracy"


@dataclass(frozen=True)
class TerminationStatus:
    """How a run ended.  `vertex` maps basic variables (z included) to
    their values; variables not listed are zero."""

    kind: TerminationKind
    vertex: Optional[Dict[VariableLabel, Fraction]] = None
    direction: Optional[Dict[str, Fraction]] = None
    count: Optional[int] = None
    witness: Optional[Tuple[str, ...]] = None

    @property
    def is_solution(self) -> bool:
        return self.kind is TerminationKind.SOLUTION


class PivotEvent(Enum):
    VERTEX = "vertex"
    RAY = "ray"


@dataclass(frozen=True)
class TraceEntry:
    iteration: int
    entering: str
    leaving: str
    z: Fraction

    def __str__(self) -> str:
        return f"{self.iteration}, {self.entering}, {self.leaving}, {self.z}"


class Tableau:
    """Working state of a Lemke run."""

    def __init__(self, lcp: LcpSystem):
        size = lcp.size
        self.lcp = lcp
        self.size = size
        self.z_col = 2 * size
        zero, one = Fraction(0), Fraction(1)
        self.matrix = np.full((size, 2 * size + 1), zero, dtype=object)
        self.matrix[:, :size] = lcp.matrix
        for row in range(size):
            self.matrix[row, size + row] = one
        self.matrix[:, self.z_col] = -lcp.covering
        self.rhs = lcp.q.copy()
        # p < P and r < R along the whole path
        self.bounds: Dict[int, Fraction] = lcp.upper_bounds()
        self.basis: List[int] = list(range(size, 2 * size))
        # Column that enters at the next step; None once z has left
        self.entering: Optional[int] = None
        self.iterations = 0
        self.trace: List[TraceEntry] = []
        self.ray_direction: Optional[Dict[str, Fraction]] = None

    def column_label(self, col: int) -> str:
        if col == self.z_col:
            return str(Z_LABEL)
        if col < self.size:
            return str(self.lcp.labels[col])
        return f"v:{self.lcp.labels[col - self.size]}"

    def complement(self, col: int) -> int:
        assert col != self.z_col, "z has no complement"
        return col + self.size if col < self.size else col - self.size

    @property
    def z_value(self) -> Fraction:
        if self.z_col in self.basis:
            return self.rhs[self.basis.index(self.z_col)]
        return Fraction(0)

    def basis_key(self) -> FrozenSet[int]:
        return frozenset(self.basis)

    def vertex(self) -> Dict[VariableLabel, Fraction]:
        values = {}
        for row, col in enumerate(self.basis):
            if col < self.size:
                values[self.lcp.labels[col]] = self.rhs[row]
            elif col == self.z_col:
                values[Z_LABEL] = self.rhs[row]
        return values

    def pivot(self, row: int, col: int):
        """Make `col` basic in `row`, eliminating it from all other rows."""
        pivot_value = self.matrix[row, col]
        assert pivot_value != 0, "pivot on a zero entry"
        pivot_row = self.matrix[row] / pivot_value
        pivot_rhs = self.rhs[row] / pivot_value
        column = self.matrix[:, col].copy()
        others = np.flatnonzero(column != 0)
        others = others[others != row]
        if others.size:
            nonzero = np.flatnonzero(pivot_row != 0)
            factors = column[others]
            self.matrix[np.ix_(others, nonzero)] -= np.multiply.outer(
                factors, pivot_row[nonzero]
            )
            self.rhs[others] -= factors * pivot_rhs
        self.matrix[row] = pivot_row
        self.rhs[row] = pivot_rhs
        leaving = self.basis[row]
        self.basis[row] = col
        self.iterations += 1
        self.trace.append(
            TraceEntry(
                iteration=self.iterations,
                entering=self.column_label(col),
                leaving=self.column_label(leaving),
                z=self.z_value,
            )
        )
        return leaving

    def leaving_row(self, col: int) -> Optional[int]:
        """Exact minimum-ratio test for entering column `col`.  Returns
        None when no row bounds the entering variable."""
        column = self.matrix[:, col]
        candidates = [row for row in range(self.size) if column[row] > 0]
        if not candidates:
            return None
        ratios = {row: self.rhs[row] / column[row] for row in candidates}
        best = min(ratios.values())
        ties = [row for row in candidates if ratios[row] == best]
        if len(ties) == 1:
            return ties[0]
        for row in ties:
            if self.basis[row] == self.z_col:
                return row
        # Lexicographic rule on the rows of the basis inverse
        keyed = sorted(
            (tuple(self.matrix[row, self.size : 2 * self.size] / column[row]), row)
            for row in ties
        )
        if keyed[0][0] == keyed[1][0]:
            raise DegeneracyError(
                "Ratio test tie survives lexicographic ordering",
                tuple(self.column_label(self.basis[row]) for row in ties),
            )
        return keyed[0][1]

    def check_vertex(self):
        """Assert the path invariants at the current vertex."""
        if any(value < 0 for value in self.rhs):
            raise PathInvariantError("Negative basic value")
        basic = set(self.basis)
        for col in range(self.size):
            if col in basic and col + self.size in basic:
                raise PathInvariantError(
                    f"Both {self.column_label(col)} and its slack are basic"
                )
        bounds = self.bounds
        for row, col in enumerate(self.basis):
            if col in bounds and self.rhs[row] >= bounds[col]:
                raise PathInvariantError(
                    f"{self.column_label(col)} = {self.rhs[row]} reached its "
                    f"bound {bounds[col]} at iteration {self.iterations}"
                )


def init_primary_ray(lcp: LcpSystem, lexicographic: bool = False) -> Tableau:
    """Move to the vertex at the end of the primary ray: y = 0 and z the
    smallest value making every row feasible.  The slack that becomes
    zero is the first double label.

    A tied argmax raises `DegeneracyError` unless `lexicographic` is set,
    in which case the tie is broken as for the perturbed right hand side
    q + (e, e^2, ...)."""
    tableau = Tableau(lcp)
    if all(value >= 0 for value in lcp.q):
        return tableau
    needed = {}
    for row in range(lcp.size):
        if lcp.covering[row] > 0:
            needed[row] = -lcp.q[row] / lcp.covering[row]
        elif lcp.q[row] < 0:
            raise ValueError(
                f"Row {lcp.labels[row]} has a negative right hand side "
                f"but no z coefficient"
            )
    z_start = max(needed.values())
    ties = [row for row, value in needed.items() if value == z_start]
    if len(ties) > 1 and not lexicographic:
        raise DegeneracyError(
            "Primary ray ends at a tie", tuple(str(lcp.labels[row]) for row in ties)
        )
    row = max(ties)
    leaving = tableau.pivot(row, tableau.z_col)
    tableau.entering = tableau.complement(leaving)
    return tableau


def step(tableau: Tableau) -> Tuple[Tableau, PivotEvent]:
    """Pivot the pending entering variable into the basis.  The tableau is
    updated in place and returned."""
    col = tableau.entering
    if col is None:
        raise ValueError("Tableau is already at a solution")
    row = tableau.leaving_row(col)
    if row is None:
        column = tableau.matrix[:, col]
        direction = {tableau.column_label(col): Fraction(1)}
        for other, basic in enumerate(tableau.basis):
            if column[other] != 0:
                direction[tableau.column_label(basic)] = -column[other]
        tableau.ray_direction = direction
        return tableau, PivotEvent.RAY
    leaving = tableau.pivot(row, col)
    tableau.entering = None if leaving == tableau.z_col else tableau.complement(leaving)
    return tableau, PivotEvent.VERTEX


@dataclass(frozen=True)
class LemkeResult:
    status: TerminationStatus
    iterations: int
    trace: Tuple[TraceEntry, ...]


def run(
    lcp: LcpSystem,
    max_iters: Optional[int] = None,
    check_invariants: bool = True,
) -> LemkeResult:
    """Follow the complementary path from the primary ray until z leaves
    the basis (a solution), a secondary ray, or `max_iters` pivots
    (default 50 per row).

    With `check_invariants`, every vertex is checked for non-negativity,
    complementarity, the bounds p_j < P and r_i < R, and against every
    basis visited before; violations raise `PathInvariantError`."""
    if max_iters is None:
        max_iters = DEFAULT_ITERS_PER_ROW * lcp.size
    tableau: Optional[Tableau] = None

    def finish(status: TerminationStatus) -> LemkeResult:
        return LemkeResult(
            status=status,
            iterations=0 if tableau is None else tableau.iterations,
            trace=() if tableau is None else tuple(tableau.trace),
        )

    try:
        tableau = init_primary_ray(lcp, lexicographic=True)
        seen: Set[FrozenSet[int]] = {tableau.basis_key()}
        while tableau.entering is not None:
            if tableau.iterations >= max_iters:
                return finish(
                    TerminationStatus(
                        TerminationKind.ITERATION_LIMIT, count=tableau.iterations
                    )
                )
            tableau, event = step(tableau)
            if event is PivotEvent.RAY:
                return finish(
                    TerminationStatus(
                        TerminationKind.SECONDARY_RAY,
                        vertex=tableau.vertex(),
                        direction=tableau.ray_direction,
                    )
                )
            if check_invariants:
                tableau.check_vertex()
                key = tableau.basis_key()
                if key in seen:
                    raise PathInvariantError(
                        f"Basis revisited at iteration {tableau.iterations}"
                    )
                seen.add(key)
    except DegeneracyError as error:
        return finish(
            TerminationStatus(TerminationKind.DEGENERACY, witness=error.witness)
        )
    return finish(TerminationStatus(TerminationKind.SOLUTION, vertex=tableau.vertex()))
