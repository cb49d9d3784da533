"""
Lift a two-dimensional Hamiltonian/integral pair to the abstract algebra.

Every monomial ``P * q1^a p1^b q2^m p2^n`` (``P`` a parameter monomial) is
mapped to generator words ``Jp^x Jm^y J3^z Am^m Ap^n`` with ``2x + z = b`` and
``2y + z = a``. Blocks admitting several words get one unknown per word and a
constraint fixing their sum to the original coefficient. Multiples of the
Casimir ``C = Jp*Jm - J3^2`` realize to zero in two dimensions; when the block
ansatz cannot commute with ``H``, ``C``-multiples are added from the quotient
of the bracket residual by ``C``. The unknowns are fixed by requiring
``{H, I} = 0`` on the leaf ``M = 1``.
"""

import logging
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Set, Tuple

from hhtk.algebra.linsolve import LinearSystem, solve_linear, sparsest_solution
from hhtk.algebra.poisson import (
    AM,
    AP,
    J3,
    JM,
    JP,
    BracketContext,
    Certificate,
    bracket,
    certify_involution,
    divide_by_casimir,
    sl2_casimir,
)
from hhtk.algebra.symexpr import Expr, Key, Symbol, SymbolKind, make_key, symbol, to_text
from hhtk.errors import Inconsistent, NotLiftable

logger = logging.getLogger(__name__)

Q1, P1, Q2, P2 = (symbol(name) for name in ('q1', 'p1', 'q2', 'p2'))

_LOWERING = ((AP, AM), (J3, JM), (JP, J3))


@dataclass
class LiftResult:
    h: Expr
    i: Expr
    system: LinearSystem
    certificate: Certificate
    words: Dict[Symbol, Expr] = field(default_factory=dict)
    rounds: int = 0

    @property
    def free_dimension(self) -> int:
        return self.system.free_dimension

    def report(self) -> str:
        lines = [f"H = {to_text(self.h)}", f"I = {to_text(self.i)}", '']
        lines.append(self.system.describe())
        solution = self.system.solution or {}
        for s, word in self.words.items():
            lines.append(f"  {s.name} multiplies {to_text(word)} -> {solution.get(s, 0)}")
        lines.append('')
        lines.append(self.certificate.to_report())
        return '\n'.join(lines)


def block_words(a: object, b: object) -> List[Tuple[int, int, int]]:
    """Exponents ``(x, y, z)`` of ``Jp^x Jm^y J3^z`` realizing ``q1^a p1^b``."""
    if not isinstance(a, int) or not isinstance(b, int):
        raise NotLiftable(f"non-integer exponents q1^{a} p1^{b}")
    if b < 0 or (a - b) % 2:
        raise NotLiftable(
            f"q1^{a} p1^{b} is not a product of p1^2, q1^2 and q1*p1"
        )
    z0 = b % 2
    zs = [z0] if a < 0 else list(range(z0, min(a, b) + 1, 2))
    return [((b - z) // 2, (a - z) // 2, z) for z in zs]


def _check_symbols(*exprs: Expr) -> None:
    for e in exprs:
        for s in e.free_symbols():
            if s in (Q1, P1, Q2, P2):
                continue
            if s.kind is SymbolKind.PARAMETER and not s.name.startswith('k'):
                continue
            raise NotLiftable(f"symbol {s.name} is outside (q1, p1, q2, p2) and parameters")


def _split(key: Key) -> Tuple[Dict[Symbol, object], object, object, object, object]:
    exps = dict(key)
    params = {s: e for s, e in exps.items() if s.kind is SymbolKind.PARAMETER}
    return params, exps.get(Q1, 0), exps.get(P1, 0), exps.get(Q2, 0), exps.get(P2, 0)


def _word(params: Dict[Symbol, object], xyz: Tuple[int, int, int], m: object, n: object) -> Key:
    x, y, z = xyz
    exps = dict(params)
    exps.update({JP: x, JM: y, J3: z, AM: m, AP: n})
    return make_key(exps)  # type: ignore[arg-type]


def lift_hamiltonian(h2: Expr) -> Expr:
    """Lift ``h2`` choosing the word with the lowest J3 power in every block."""
    _check_symbols(h2)
    terms: Dict[Key, Fraction] = {}
    for key, coeff in h2.items():
        params, a, b, m, n = _split(key)
        words = block_words(a, b)
        if len(words) > 1:
            logger.debug(f"Hamiltonian block q1^{a} p1^{b} lifted to its first word")
        word = _word(params, words[0], m, n)
        terms[word] = terms.get(word, Fraction(0)) + coeff
    return Expr(terms)


class _Ansatz:
    """Block ansatz for the integral plus the growing set of C-multiples."""

    def __init__(self, i2: Expr):
        self.fixed = Expr()
        self.variable = Expr()
        self.unknowns: List[Symbol] = []
        self.words: Dict[Symbol, Expr] = {}
        self.constraints: List[Expr] = []
        self.covered: Set[Key] = set()
        self.casimir_words: List[Key] = []
        for key, coeff in i2.items():
            params, a, b, m, n = _split(key)
            words = [_word(params, xyz, m, n) for xyz in block_words(a, b)]
            if len(words) == 1:
                self.fixed = self.fixed + Expr({words[0]: coeff})
                continue
            total = Expr.const(-coeff)
            for word in words:
                k = self._fresh(Expr({word: Fraction(1)}))
                self.variable = self.variable + Expr.sym(k) * Expr({word: Fraction(1)})
                total = total + Expr.sym(k)
                self.covered.add(word)
            self.constraints.append(total)

    def _fresh(self, word: Expr) -> Symbol:
        k = symbol(f"k{len(self.unknowns) + 1}")
        self.unknowns.append(k)
        self.words[k] = word
        return k

    def add_casimir_multiple(self, g: Key) -> None:
        c = sl2_casimir()
        word = Expr({g: Fraction(1)})
        k = self._fresh(c * word)
        self.casimir_words.append(g)
        self.variable = self.variable + Expr.sym(k) * c * word

    def expression(self) -> Expr:
        return self.fixed + self.variable

    def is_covered(self, g: Key) -> bool:
        word = Expr({g: Fraction(1)})
        forms = [word * Expr.sym(JP) * Expr.sym(JM), word * Expr.sym(J3, 2)]
        return all(next(iter(dict(f.items()))) in self.covered for f in forms)


def _lowered(key: Key, unknowns: Set[Symbol]) -> List[Key]:
    exps = {s: e for s, e in key if s not in unknowns}
    out = []
    for src, dst in _LOWERING:
        e = exps.get(src, 0)
        if isinstance(e, int) and e >= 1:
            moved = dict(exps)
            moved[src] = e - 1
            moved[dst] = moved.get(dst, 0) + 1
            out.append(make_key(moved))  # type: ignore[arg-type]
    return out


def _equations(residual: Expr, ansatz: _Ansatz) -> LinearSystem:
    unknown_set = set(ansatz.unknowns)
    system = LinearSystem(unknowns=list(ansatz.unknowns))
    for part in residual.group_by(lambda s: s not in unknown_set).values():
        system.add(part)
    for constraint in ansatz.constraints:
        system.add(constraint)
    return system


def lift_to_abstract(h2: Expr, i2: Expr, max_rounds: int = 2) -> LiftResult:
    """Abstract forms of a commuting 2D pair, with the solved linear system.

    Raises:
        NotLiftable: if a monomial does not decompose into the (q1, p1) blocks
        Inconsistent: if no choice of coefficients makes H and I commute
    """
    start = time.perf_counter()
    ctx = BracketContext.abstract()
    _check_symbols(h2, i2)
    h = lift_hamiltonian(h2)
    ansatz = _Ansatz(i2)
    logger.info(
        f"Lifting integral: {len(i2)} terms, {len(ansatz.unknowns)} block unknowns"
    )

    rounds = 0
    while True:
        residual = ctx.on_leaf(bracket(ansatz.expression(), h, ctx))
        system = _equations(residual, ansatz)
        try:
            solution = solve_linear(system, allow_free=True)
            break
        except Inconsistent:
            if rounds >= max_rounds:
                raise
            candidates = _casimir_candidates(residual, ansatz)
            if not candidates:
                raise
            rounds += 1
            logger.info(f"Adding {len(candidates)} Casimir multiples (round {rounds})")
            for g in candidates:
                ansatz.add_casimir_multiple(g)

    if system.free_dimension:
        solution = sparsest_solution(system)
    values = {s: Expr.const(v) for s, v in solution.items()}
    integral = ansatz.expression().substitute(values)
    certificate = certify_involution(h, integral, ctx, label='H,I', model='lift')
    if not certificate.passed:
        raise Inconsistent(
            f"lifted pair does not commute: {to_text(certificate.residual)}"
        )
    logger.info(
        f"Lift finished in {time.perf_counter() - start:.2f}s, "
        f"free dimension {system.free_dimension}"
    )
    return LiftResult(h, integral, system, certificate, dict(ansatz.words), rounds)


def _casimir_candidates(residual: Expr, ansatz: _Ansatz) -> List[Key]:
    quotient, _ = divide_by_casimir(residual)
    unknown_set = set(ansatz.unknowns)
    seen = set(ansatz.casimir_words)
    found: Dict[Key, Fraction] = {}
    for key, _coeff in quotient.items():
        for g in _lowered(key, unknown_set):
            if g in seen or g in found or ansatz.is_covered(g):
                continue
            found[g] = Fraction(1)
    return [m.exponents for m in Expr(found).terms]


def lift_pair(h2: Expr, i2: Expr) -> Tuple[Expr, Expr, LinearSystem]:
    """``(H_abstract, I_abstract, LinearSystem)``."""
    result = lift_to_abstract(h2, i2)
    return result.h, result.i, result.system


def casimir_difference(a: Expr, b: Expr) -> Optional[Expr]:
    """``(a - b) / C`` when the two agree on the 2D leaf, else ``None``."""
    quotient, remainder = divide_by_casimir(a - b)
    return quotient if remainder.is_empty else None
