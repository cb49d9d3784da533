"""
Exact linear systems over the rationals.

Equations are ``Expr`` values linear in a list of unknown symbols; they are
turned into a ``Fraction`` matrix and reduced to row echelon form with
rational pivots. Free unknowns are set to zero for the basic solution and
the null space is returned alongside it; ``sparsest_solution`` then picks
the point of the solution set with the fewest nonzero unknowns.
"""

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Dict, List, Optional, Sequence, Set, Tuple

from hhtk.algebra.symexpr import Expr, Symbol, to_text
from hhtk.errors import Inconsistent, Underdetermined

logger = logging.getLogger(__name__)

Row = List[Fraction]

MAX_SUPPORT_CANDIDATES = 20000


@dataclass
class LinearSystem:
    """Unknowns, equations that must vanish, and (once solved) the solution."""

    unknowns: List[Symbol]
    equations: List[Expr] = field(default_factory=list)
    solution: Optional[Dict[Symbol, Fraction]] = None
    nullspace: List[Dict[Symbol, Fraction]] = field(default_factory=list)

    @property
    def free_dimension(self) -> int:
        return len(self.nullspace)

    def add(self, equation: Expr) -> None:
        if not equation.is_empty:
            self.equations.append(equation)

    def residuals(self, values: Dict[Symbol, Fraction]) -> List[Expr]:
        mapping = {s: Expr.const(v) for s, v in values.items()}
        return [eq.substitute(mapping) for eq in self.equations]

    def describe(self) -> str:
        lines = [f"unknowns: {len(self.unknowns)}  equations: {len(self.equations)}"]
        if self.solution is not None:
            for s in self.unknowns:
                lines.append(f"  {s.name} = {self.solution.get(s, Fraction(0))}")
            lines.append(f"free dimension: {self.free_dimension}")
        return '\n'.join(lines)


def to_matrix(system: LinearSystem) -> Tuple[List[Row], Row]:
    """Coefficient matrix and right-hand side of ``A x = b``."""
    index = {s: j for j, s in enumerate(system.unknowns)}
    matrix: List[Row] = []
    rhs: Row = []
    for eq in system.equations:
        row = [Fraction(0)] * len(index)
        constant = Fraction(0)
        for key, coeff in eq.items():
            if not key:
                constant += coeff
                continue
            if len(key) != 1 or key[0][1] != 1 or key[0][0] not in index:
                raise ValueError(f"equation is not linear in the unknowns: {to_text(eq)}")
            row[index[key[0][0]]] += coeff
        matrix.append(row)
        rhs.append(-constant)
    return matrix, rhs


def row_reduce(matrix: List[Row], rhs: Row) -> Tuple[List[int], int]:
    """Reduced row echelon form in place. Returns pivot columns and rank."""
    n_rows = len(matrix)
    n_cols = len(matrix[0]) if matrix else 0
    pivots: List[int] = []
    r = 0
    for c in range(n_cols):
        if r >= n_rows:
            break
        pivot_row = next((i for i in range(r, n_rows) if matrix[i][c] != 0), None)
        if pivot_row is None:
            continue
        if pivot_row != r:
            matrix[r], matrix[pivot_row] = matrix[pivot_row], matrix[r]
            rhs[r], rhs[pivot_row] = rhs[pivot_row], rhs[r]
        inv = 1 / matrix[r][c]
        matrix[r] = [v * inv for v in matrix[r]]
        rhs[r] *= inv
        for i in range(n_rows):
            if i == r or matrix[i][c] == 0:
                continue
            factor = matrix[i][c]
            matrix[i] = [a - factor * b for a, b in zip(matrix[i], matrix[r])]
            rhs[i] -= factor * rhs[r]
        pivots.append(c)
        r += 1
    return pivots, r


def solve_linear(system: LinearSystem, allow_free: bool = False) -> Dict[Symbol, Fraction]:
    """Solve exactly; fills ``system.solution`` and ``system.nullspace``.

    Raises:
        Inconsistent: if the equations admit no solution
        Underdetermined: if free unknowns remain and ``allow_free`` is False
    """
    unknowns = system.unknowns
    if not system.equations:
        matrix: List[Row] = []
        rhs: Row = []
    else:
        matrix, rhs = to_matrix(system)
    pivots, rank = row_reduce(matrix, rhs) if matrix else ([], 0)

    for i in range(rank, len(matrix)):
        if rhs[i] != 0:
            raise Inconsistent(
                f"no solution: row {i} reduces to 0 = {rhs[i]} "
                f"({len(system.equations)} equations, rank {rank})"
            )

    free = [j for j in range(len(unknowns)) if j not in pivots]
    values = {s: Fraction(0) for s in unknowns}
    for r, c in enumerate(pivots):
        values[unknowns[c]] = rhs[r]

    nullspace: List[Dict[Symbol, Fraction]] = []
    for f in free:
        vector = {s: Fraction(0) for s in unknowns}
        vector[unknowns[f]] = Fraction(1)
        for r, c in enumerate(pivots):
            vector[unknowns[c]] = -matrix[r][f]
        nullspace.append(vector)

    system.solution = values
    system.nullspace = nullspace
    _verify(system, values)

    if nullspace:
        logger.info(f"Linear system has a {len(nullspace)}-dimensional solution set")
        if not allow_free:
            raise Underdetermined(
                f"{len(nullspace)} free unknowns: "
                + ', '.join(unknowns[f].name for f in free),
                nullspace,
            )
    return values




def sparsest_solution(
    system: LinearSystem, max_candidates: int = MAX_SUPPORT_CANDIDATES
) -> Dict[Symbol, Fraction]:
    """Point of the solution set with the fewest nonzero unknowns.

    Supports are tried by increasing size and, within one size, in unknown
    order, so ties go to the support that comes first. Unknowns the null
    space does not move keep their value. Falls back to the basic solution
    when more than ``max_candidates`` supports would have to be tried.
    Updates ``system.solution``.
    """
    if system.solution is None:
        solve_linear(system, allow_free=True)
    assert system.solution is not None
    basic = system.solution
    nullspace = system.nullspace
    if not nullspace:
        return basic

    unknowns = system.unknowns
    moving = [s for s in unknowns if any(v[s] != 0 for v in nullspace)]
    bound = sum(1 for s in moving if basic[s] != 0)
    tried = 0
    for size in range(bound + 1):
        for support in combinations(moving, size):
            tried += 1
            if tried > max_candidates:
                logger.warning(
                    f"Sparsest-solution search stopped after {max_candidates} supports; "
                    "keeping the basic solution"
                )
                return basic
            values = _restricted(system, set(support), moving)
            if values is not None:
                _verify(system, values)
                logger.info(
                    f"Sparsest solution has {_support_size(values)} nonzero unknowns "
                    f"(basic solution {_support_size(basic)})"
                )
                system.solution = values
                return values
    return basic


def _restricted(
    system: LinearSystem, support: Set[Symbol], moving: Sequence[Symbol]
) -> Optional[Dict[Symbol, Fraction]]:
    """Solution with every moving unknown outside ``support`` at zero, if any."""
    assert system.solution is not None
    basic = system.solution
    nullspace = system.nullspace
    matrix = [[v[s] for v in nullspace] for s in moving if s not in support]
    rhs = [-basic[s] for s in moving if s not in support]
    pivots, rank = row_reduce(matrix, rhs) if matrix else ([], 0)
    if any(rhs[i] != 0 for i in range(rank, len(matrix))):
        return None
    weights = [Fraction(0)] * len(nullspace)
    for r, c in enumerate(pivots):
        weights[c] = rhs[r]
    return {
        s: basic[s] + sum((w * v[s] for w, v in zip(weights, nullspace)), Fraction(0))
        for s in system.unknowns
    }


def _support_size(values: Dict[Symbol, Fraction]) -> int:
    return sum(1 for v in values.values() if v != 0)


def _verify(system: LinearSystem, values: Dict[Symbol, Fraction]) -> None:
    leftovers = [r for r in system.residuals(values) if not r.is_empty]
    if leftovers:
        raise Inconsistent(f"back-substitution left {to_text(leftovers[0])}")


def basis_text(nullspace: Sequence[Dict[Symbol, Fraction]]) -> List[str]:
    out = []
    for vector in nullspace:
        out.append(', '.join(f"{s.name}={v}" for s, v in vector.items() if v))
    return out
