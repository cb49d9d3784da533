"""
Poisson brackets, Casimirs and involution certificates.

Two bracket modes are supported:

* canonical(N): {f, g} = sum_i (df/dq_i dg/dp_i - df/dp_i dg/dq_i)
* abstract: the Lie-Poisson bracket of sl(2,R) + h3 on the generators
  Jp, Jm, J3, Ap, Am, M, extended to products by the Leibniz rule.
"""

import logging
import random
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

from hhtk.algebra.symexpr import (
    GENERATOR_NAMES,
    Expr,
    Symbol,
    SymbolKind,
    canonical_symbols,
    symbol,
    to_text,
)
from hhtk.errors import UnknownSymbol, WrongMode

logger = logging.getLogger(__name__)

JP, JM, J3, AP, AM, M = (symbol(name) for name in GENERATOR_NAMES)


class StructureTable:
    """Brackets between generators. Only the nonzero ones are stored."""

    def __init__(self) -> None:
        jp, jm, j3, ap, m = (Expr.sym(s) for s in (JP, JM, J3, AP, M))
        base = {
            (J3, JP): jp.scale(2),
            (J3, JM): jm.scale(-2),
            (JM, JP): j3.scale(4),
            (AM, AP): m,
        }
        self._table: Dict[Tuple[Symbol, Symbol], Expr] = {}
        for (x, y), value in base.items():
            self._table[(x, y)] = value
            self._table[(y, x)] = -value

    def __getitem__(self, pair: Tuple[Symbol, Symbol]) -> Expr:
        return self._table.get(pair, Expr())

    def items(self):
        return self._table.items()

    @property
    def generators(self) -> Tuple[Symbol, ...]:
        return (JP, JM, J3, AP, AM, M)


STRUCTURE = StructureTable()


@dataclass(frozen=True)
class SymbolTable:
    """Symbols admissible in a bracket context."""

    positions: int = 0
    generators: bool = False

    def admits(self, s: Symbol) -> bool:
        if s.kind is SymbolKind.PARAMETER:
            return True
        if s.kind in (SymbolKind.POSITION, SymbolKind.MOMENTUM):
            return s.index is not None and 1 <= s.index <= self.positions
        if s.kind is SymbolKind.GENERATOR:
            return self.generators
        if s.kind is SymbolKind.AUXILIARY:
            return (
                self.positions > 0
                and s.denominator is not None
                and all(self.admits(t) for t in s.denominator.free_symbols())
            )
        return False


@dataclass(frozen=True)
class BracketContext:
    """Where a bracket is evaluated.

    Abstract certificates are read on the symplectic leaf ``M = 1``, the leaf
    selected by every canonical realization.
    """

    mode: str
    n: int = 0
    leaf: Tuple[Tuple[str, int], ...] = (('M', 1),)
    table: SymbolTable = field(default_factory=SymbolTable)

    @classmethod
    def canonical(cls, n: int) -> 'BracketContext':
        if n < 1:
            raise ValueError(f"canonical context needs n >= 1, got {n}")
        return cls('canonical', n, (), SymbolTable(positions=n))

    @classmethod
    def abstract(cls) -> 'BracketContext':
        return cls('abstract', 0, (('M', 1),), SymbolTable(generators=True))

    @property
    def is_canonical(self) -> bool:
        return self.mode == 'canonical'

    def describe(self) -> str:
        return f"canonical(N={self.n})" if self.is_canonical else 'abstract'

    def check(self, *exprs: Expr) -> None:
        for e in exprs:
            bad = [s.name for s in e.free_symbols() if not self.table.admits(s)]
            if bad:
                raise UnknownSymbol(
                    f"symbols {', '.join(bad)} are not part of {self.describe()}"
                )

    def on_leaf(self, e: Expr) -> Expr:
        if not self.leaf:
            return e
        return e.substitute(dict(self.leaf))


def bracket(f: Expr, g: Expr, ctx: BracketContext) -> Expr:
    """Exact Poisson bracket ``{f, g}`` in the given context."""
    ctx.check(f, g)
    if ctx.is_canonical:
        return _canonical_bracket(f, g, ctx.n)
    return _abstract_bracket(f, g)


def _canonical_bracket(f: Expr, g: Expr, n: int) -> Expr:
    qs, ps = canonical_symbols(n)
    result = Expr()
    for q, p in zip(qs, ps):
        fq, gp = f.diff(q), g.diff(p)
        if not fq.is_empty and not gp.is_empty:
            result = result + fq * gp
        fp, gq = f.diff(p), g.diff(q)
        if not fp.is_empty and not gq.is_empty:
            result = result - fp * gq
    return result


def _abstract_bracket(f: Expr, g: Expr) -> Expr:
    df = {x: f.diff(x) for x in STRUCTURE.generators}
    dg = {y: g.diff(y) for y in STRUCTURE.generators}
    result = Expr()
    for (x, y), value in STRUCTURE.items():
        if df[x].is_empty or dg[y].is_empty:
            continue
        result = result + df[x] * dg[y] * value
    return result


def casimirs(ctx: BracketContext) -> List[Expr]:
    """``[M, Jp*Jm - J3^2]`` for the abstract algebra."""
    if ctx.is_canonical:
        raise WrongMode('Casimir functions are defined for the abstract algebra')
    jp, jm, j3 = Expr.sym(JP), Expr.sym(JM), Expr.sym(J3)
    return [Expr.sym(M), jp * jm - j3 ** 2]


def sl2_casimir() -> Expr:
    return casimirs(BracketContext.abstract())[1]


def divide_by_casimir(e: Expr) -> Tuple[Expr, Expr]:
    """Write ``e = C*quotient + remainder`` with ``C = Jp*Jm - J3^2``.

    Every remainder term has J3-degree at most one, so the remainder is zero
    exactly when the two-dimensional realization of ``e`` vanishes.
    """
    quotient: Dict = {}
    remainder: Dict = {}
    pending = dict(e.items())
    while pending:
        key, coeff = pending.popitem()
        z = dict(key).get(J3, 0)
        if not isinstance(z, int) or z < 2:
            remainder[key] = remainder.get(key, Fraction(0)) + coeff
            continue
        reduced = Expr({key: coeff}) * Expr.sym(J3, -2)
        (rkey, rcoeff), = reduced.items()
        quotient[rkey] = quotient.get(rkey, Fraction(0)) - rcoeff
        for k2, c2 in (reduced * Expr.sym(JP) * Expr.sym(JM)).items():
            pending[k2] = pending.get(k2, Fraction(0)) + c2
            if pending[k2] == 0:
                del pending[k2]
    return Expr(quotient), Expr(remainder)


@dataclass
class Certificate:
    """Outcome of an involution check; a nonzero residual is data."""

    label: str
    mode: str
    residual: Expr
    elapsed: float = 0.0
    model: str = ''
    n: int = 2

    @property
    def passed(self) -> bool:
        return self.residual.is_empty

    @property
    def status(self) -> str:
        return 'zero' if self.passed else 'residual'

    def summary_line(self) -> str:
        verdict = 'PASS' if self.passed else 'FAIL'
        return f"{verdict} {self.model or '-'} {self.n} {self.mode} {self.label}"

    def to_report(self, timing: bool = False) -> str:
        lines = [
            f"model:    {self.model or '-'}",
            f"pair:     {self.label}",
            f"mode:     {self.mode}",
            f"status:   {self.status}",
            f"residual: {'' if self.passed else to_text(self.residual)}",
        ]
        if timing:
            lines.append(f"wall:     {self.elapsed:.3f}s")
        lines.append(self.summary_line())
        return '\n'.join(lines)


def certify_involution(
    h: Expr,
    i: Expr,
    ctx: BracketContext,
    label: str = 'H,I',
    model: str = '',
) -> Certificate:
    """Bracket ``h`` with ``i`` and return an exact certificate."""
    start = time.perf_counter()
    raw = ctx.on_leaf(bracket(h, i, ctx))
    residual = Expr() if raw.is_zero() else raw
    elapsed = time.perf_counter() - start
    cert = Certificate(
        label=label,
        mode=ctx.describe(),
        residual=residual,
        elapsed=elapsed,
        model=model,
        n=ctx.n if ctx.is_canonical else 0,
    )
    logger.debug(f"{cert.summary_line()} ({elapsed:.3f}s)")
    return cert


# Numeric oracle

def random_point(
    exprs: Sequence[Expr],
    n: int,
    rng: random.Random,
    parameter_values: Optional[Mapping[str, float]] = None,
) -> Dict[Symbol, float]:
    """A random admissible point: positive positions, mixed-sign momenta."""
    point: Dict[Symbol, float] = {}
    qs, ps = canonical_symbols(n)
    for q in qs:
        point[q] = rng.uniform(0.5, 1.5)
    for p in ps:
        point[p] = rng.uniform(-1.0, 1.0)
    fixed = dict(parameter_values or {})
    for e in exprs:
        for s in e.free_symbols():
            if s.kind is SymbolKind.PARAMETER and s not in point:
                point[s] = fixed.get(s.name, rng.uniform(0.5, 1.5))
    return point


def numeric_bracket(
    f: Expr,
    g: Expr,
    n: int,
    point: Mapping[Symbol, float],
    h: float = 1e-6,
) -> float:
    """Canonical bracket by central finite differences at one point."""

    def partial(e: Expr, s: Symbol) -> float:
        up = dict(point)
        down = dict(point)
        up[s] += h
        down[s] -= h
        return (e.evaluate(up) - e.evaluate(down)) / (2.0 * h)

    qs, ps = canonical_symbols(n)
    total = 0.0
    for q, p in zip(qs, ps):
        total += partial(f, q) * partial(g, p) - partial(f, p) * partial(g, q)
    return total


def spot_check(
    f: Expr,
    g: Expr,
    n: int,
    seed: int = 0,
    points: int = 10,
) -> float:
    """Largest finite-difference bracket over random points, scaled by the operands."""
    rng = random.Random(seed)
    worst = 0.0
    for _ in range(points):
        point = random_point([f, g], n, rng)
        scale = max(1.0, abs(f.evaluate(point)) * abs(g.evaluate(point)))
        worst = max(worst, abs(numeric_bracket(f, g, n, point)) / scale)
    return worst


def as_expr(value: Union[Expr, str]) -> Expr:
    if isinstance(value, Expr):
        return value
    from hhtk.algebra.grammar import parse_expr

    return parse_expr(value)
