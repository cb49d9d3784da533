"""
Exact symbolic expression kernel.

An ``Expr`` is a finite sum of monomials with ``Fraction`` coefficients and
rational exponents over named symbols. Expressions are immutable and always
kept in normal form: like terms merged, zero coefficients and zero exponents
dropped, terms ordered by a fixed graded order.

Negative powers of sums are represented by an auxiliary inverse symbol ``u``
carrying its denominator ``S`` (side relation ``u*S = 1``). Differentiation
applies the chain rule through ``u`` and zero tests clear the denominator.
"""

import logging
import math
import re
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from functools import lru_cache
from typing import (
    Callable,
    Dict,
    Iterable,
    List,
    Mapping,
    Optional,
    Sequence,
    Tuple,
    Union,
)

from hhtk.errors import (
    DivisionByZero,
    DomainError,
    NegativePowerOfSum,
    NonMonomialNegativePower,
    UnboundParameter,
    UnknownSymbol,
    UnsupportedSideRelation,
)

logger = logging.getLogger(__name__)

Exponent = Union[int, Fraction]
Key = Tuple[Tuple['Symbol', Exponent], ...]
Rational = Union[int, Fraction]
Number = Union[int, Fraction, float]


class SymbolKind(str, Enum):
    POSITION = 'position'
    MOMENTUM = 'momentum'
    GENERATOR = 'generator'
    PARAMETER = 'parameter'
    AUXILIARY = 'auxiliary'


_KIND_RANK = {
    SymbolKind.POSITION: 0,
    SymbolKind.MOMENTUM: 1,
    SymbolKind.GENERATOR: 2,
    SymbolKind.PARAMETER: 3,
    SymbolKind.AUXILIARY: 4,
}

GENERATOR_NAMES = ('Jp', 'Jm', 'J3', 'Ap', 'Am', 'M')

_NAMED_PARAMETERS = {
    'delta': 1,
    'Omega': 2,
    'alpha': 3,
    'beta': 4,
    'lambda': 5,
    'nu': 6,
    'c': 7,
}

# a<i>: Ramani coefficients, g<i>: rational-series coefficients,
# b<i>: centrifugal constants, xi<i>: Hone-notation coefficients,
# k<i>: unknowns introduced by the lift.
_INDEXED = re.compile(r'^(q|p|a|g|b|xi|k)([1-9][0-9]*)$')
_INDEXED_ZERO = re.compile(r'^(xi)(0)$')


class Symbol:
    """A named symbol. Compared by name, kind, index and denominator."""

    __slots__ = ('name', 'kind', 'index', 'denominator', 'sort_key', '_hash')

    def __init__(
        self,
        name: str,
        kind: SymbolKind,
        index: Optional[int] = None,
        denominator: Optional['Expr'] = None,
    ):
        self.name = name
        self.kind = kind
        self.index = index
        self.denominator = denominator
        tag = '' if denominator is None else to_text(denominator)
        self.sort_key = (_KIND_RANK[kind], index or 0, name, tag)
        self._hash = hash((name, kind, index, denominator))

    def __eq__(self, other: object) -> bool:
        if self is other:
            return True
        if not isinstance(other, Symbol):
            return NotImplemented
        return (
            self._hash == other._hash
            and self.name == other.name
            and self.kind == other.kind
            and self.index == other.index
            and self.denominator == other.denominator
        )

    def __hash__(self) -> int:
        return self._hash

    def __lt__(self, other: 'Symbol') -> bool:
        return self.sort_key < other.sort_key

    def __repr__(self) -> str:
        return f"Symbol({self.name!r}, {self.kind.value})"

    def __str__(self) -> str:
        return self.name

    @property
    def is_auxiliary(self) -> bool:
        return self.kind is SymbolKind.AUXILIARY


@lru_cache(maxsize=None)
def symbol(name: str) -> Symbol:
    """Return the interned symbol for a grammar name such as ``q1`` or ``Jm``."""
    if name in GENERATOR_NAMES:
        return Symbol(name, SymbolKind.GENERATOR, GENERATOR_NAMES.index(name) + 1)
    if name in _NAMED_PARAMETERS:
        return Symbol(name, SymbolKind.PARAMETER, _NAMED_PARAMETERS[name])
    match = _INDEXED.match(name) or _INDEXED_ZERO.match(name)
    if match is None:
        raise UnknownSymbol(f"unknown symbol name: {name!r}")
    family, index = match.group(1), int(match.group(2))
    if family == 'q':
        return Symbol(name, SymbolKind.POSITION, index)
    if family == 'p':
        return Symbol(name, SymbolKind.MOMENTUM, index)
    return Symbol(name, SymbolKind.PARAMETER, index)


def symbols(names: str) -> List[Symbol]:
    return [symbol(name) for name in names.replace(',', ' ').split()]


def canonical_symbols(n: int) -> Tuple[List[Symbol], List[Symbol]]:
    """Positions and momenta for ``n`` degrees of freedom."""
    return (
        [symbol(f"q{i}") for i in range(1, n + 1)],
        [symbol(f"p{i}") for i in range(1, n + 1)],
    )


def _norm_exponent(e: Exponent) -> Exponent:
    if isinstance(e, Fraction) and e.denominator == 1:
        return e.numerator
    return e


def _to_fraction(value: Rational) -> Fraction:
    if isinstance(value, bool) or not isinstance(value, (int, Fraction)):
        raise TypeError(f"exact rational required, got {type(value).__name__}")
    return Fraction(value)


def _item_key(item: Tuple[Symbol, Exponent]) -> Tuple:
    return item[0].sort_key


def make_key(exponents: Mapping[Symbol, Exponent]) -> Key:
    return tuple(sorted(
        ((s, _norm_exponent(e)) for s, e in exponents.items() if e != 0),
        key=_item_key,
    ))


def _mul_keys(k1: Key, k2: Key) -> Key:
    if not k1:
        return k2
    if not k2:
        return k1
    merged = dict(k1)
    for s, e in k2:
        current = merged.get(s)
        if current is None:
            merged[s] = e
            continue
        total = current + e
        if total == 0:
            del merged[s]
        else:
            merged[s] = _norm_exponent(total)
    return tuple(sorted(merged.items(), key=_item_key))


def _scale_key(key: Key, factor: Exponent) -> Key:
    return tuple((s, _norm_exponent(e * factor)) for s, e in key)


def _degree(key: Key) -> Exponent:
    return sum((e for _, e in key), 0)


def _term_order(key: Key) -> Tuple:
    return (-_degree(key), tuple((s.sort_key, -e) for s, e in key))


@dataclass(frozen=True)
class Monomial:
    """One term of an expression: ``coefficient * prod(symbol ** exponent)``."""

    coefficient: Fraction
    exponents: Key

    def exponent(self, s: Symbol) -> Exponent:
        for sym, e in self.exponents:
            if sym == s:
                return e
        return 0

    @property
    def degree(self) -> Exponent:
        return _degree(self.exponents)

    def as_expr(self) -> 'Expr':
        return Expr({self.exponents: self.coefficient})


class Expr:
    """Immutable exact expression in normal form."""

    __slots__ = ('_terms', '_hash', '_sorted')

    def __init__(self, terms: Optional[Mapping[Key, Fraction]] = None):
        self._terms: Dict[Key, Fraction] = (
            {k: c for k, c in terms.items() if c != 0} if terms else {}
        )
        self._hash: Optional[int] = None
        self._sorted: Optional[Tuple[Monomial, ...]] = None

    # Construction

    @classmethod
    def const(cls, value: Rational) -> 'Expr':
        value = _to_fraction(value)
        return cls({(): value}) if value else cls()

    @classmethod
    def sym(cls, s: Union[str, Symbol], exponent: Exponent = 1) -> 'Expr':
        if isinstance(s, str):
            s = symbol(s)
        if exponent == 0:
            return cls.const(1)
        return cls({((s, _norm_exponent(exponent)),): Fraction(1)})

    @classmethod
    def from_monomials(cls, monomials: Iterable[Monomial]) -> 'Expr':
        acc: Dict[Key, Fraction] = {}
        for m in monomials:
            acc[m.exponents] = acc.get(m.exponents, Fraction(0)) + m.coefficient
        return cls(acc)

    # Inspection

    @property
    def terms(self) -> Tuple[Monomial, ...]:
        if self._sorted is None:
            self._sorted = tuple(
                Monomial(self._terms[k], k)
                for k in sorted(self._terms, key=_term_order)
            )
        return self._sorted

    def items(self) -> Iterable[Tuple[Key, Fraction]]:
        return self._terms.items()

    def __len__(self) -> int:
        return len(self._terms)

    @property
    def is_empty(self) -> bool:
        return not self._terms

    @property
    def is_monomial(self) -> bool:
        return len(self._terms) == 1

    @property
    def is_constant(self) -> bool:
        return not self._terms or (len(self._terms) == 1 and () in self._terms)

    def constant_value(self) -> Fraction:
        if not self.is_constant:
            raise ValueError(f"not a constant: {self}")
        return self._terms.get((), Fraction(0))

    def free_symbols(self) -> List[Symbol]:
        found = {s for key in self._terms for s, _ in key}
        return sorted(found, key=lambda s: s.sort_key)

    def auxiliaries(self) -> List[Symbol]:
        return [s for s in self.free_symbols() if s.is_auxiliary]

    def degree_in(self, accept: Callable[[Symbol], bool]) -> Exponent:
        """Largest total exponent carried by the accepted symbols in any term."""
        if not self._terms:
            return 0
        return max(
            sum((e for s, e in key if accept(s)), 0) for key in self._terms
        )

    def group_by(self, select: Callable[[Symbol], bool]) -> Dict[Key, 'Expr']:
        """Split every term into its selected factors and the remainder.

        Returns a map from the selected sub-monomial to the expression formed
        by the remaining factors of all terms sharing it.
        """
        groups: Dict[Key, Dict[Key, Fraction]] = {}
        for key, coeff in self._terms.items():
            chosen = tuple(item for item in key if select(item[0]))
            rest = tuple(item for item in key if not select(item[0]))
            bucket = groups.setdefault(chosen, {})
            bucket[rest] = bucket.get(rest, Fraction(0)) + coeff
        return {k: Expr(v) for k, v in groups.items()}

    # Arithmetic

    @staticmethod
    def _coerce(other: object) -> 'Expr':
        if isinstance(other, Expr):
            return other
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            return Expr.const(other)
        return NotImplemented  # type: ignore[return-value]

    def __add__(self, other: object) -> 'Expr':
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        if not other._terms:
            return self
        if not self._terms:
            return other
        acc = dict(self._terms)
        for k, c in other._terms.items():
            acc[k] = acc.get(k, Fraction(0)) + c
        return Expr(acc)

    __radd__ = __add__

    def __neg__(self) -> 'Expr':
        return Expr({k: -c for k, c in self._terms.items()})

    def __pos__(self) -> 'Expr':
        return self

    def __sub__(self, other: object) -> 'Expr':
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other: object) -> 'Expr':
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return other + (-self)

    def __mul__(self, other: object) -> 'Expr':
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        if not self._terms or not other._terms:
            return Expr()
        acc: Dict[Key, Fraction] = {}
        for k1, c1 in self._terms.items():
            for k2, c2 in other._terms.items():
                k = _mul_keys(k1, k2)
                acc[k] = acc.get(k, Fraction(0)) + c1 * c2
        return Expr(acc)

    __rmul__ = __mul__

    def scale(self, r: Rational) -> 'Expr':
        r = _to_fraction(r)
        return Expr({k: c * r for k, c in self._terms.items()})

    def __pow__(self, n: Exponent) -> 'Expr':
        if isinstance(n, Fraction):
            n = _norm_exponent(n)
        if isinstance(n, int):
            if n == 0:
                return Expr.const(1)
            if n > 0:
                result = Expr.const(1)
                base = self
                while n:
                    if n & 1:
                        result = result * base
                    n >>= 1
                    if n:
                        base = base * base
                return result
        if not self.is_monomial:
            if not self._terms:
                raise DivisionByZero("negative or fractional power of zero")
            raise NegativePowerOfSum(
                f"power {n} of a sum with {len(self._terms)} terms"
            )
        ((key, coeff),) = self._terms.items()
        return Expr({_scale_key(key, n): _rational_power(coeff, n)})

    def __truediv__(self, other: object) -> 'Expr':
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            if other == 0:
                raise DivisionByZero("division by zero constant")
            return self.scale(Fraction(1) / Fraction(other))
        if isinstance(other, Expr):
            return self * other ** -1
        return NotImplemented

    def __rtruediv__(self, other: object) -> 'Expr':
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return other * self ** -1

    # Comparison

    def __eq__(self, other: object) -> bool:
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            other = Expr.const(other)
        if not isinstance(other, Expr):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self._terms.items()))
        return self._hash

    def is_zero(self) -> bool:
        """Exact zero test, honouring the side relation of an inverse symbol."""
        if not self._terms:
            return True
        if not self.auxiliaries():
            return False
        return clear_inverse(self).is_empty

    # Calculus and substitution

    def diff(self, s: Union[str, Symbol]) -> 'Expr':
        """Partial derivative; inverse symbols contribute ``du = -u^2 dS``."""
        if isinstance(s, str):
            s = symbol(s)
        acc: Dict[Key, Fraction] = {}
        chain: List[Expr] = []
        for key, coeff in self._terms.items():
            for pos, (sym, e) in enumerate(key):
                if sym == s:
                    e1 = _norm_exponent(e - 1)
                    if e1:
                        rest = key[:pos] + ((sym, e1),) + key[pos + 1:]
                    else:
                        rest = key[:pos] + key[pos + 1:]
                    acc[rest] = acc.get(rest, Fraction(0)) + coeff * e
                elif sym.is_auxiliary and sym.denominator is not None:
                    d_den = sym.denominator.diff(s)
                    if d_den.is_empty:
                        continue
                    bumped = key[:pos] + ((sym, _norm_exponent(e + 1)),) + key[pos + 1:]
                    chain.append(Expr({bumped: -coeff * e}) * d_den)
        result = Expr(acc)
        for part in chain:
            result = result + part
        return result

    def substitute(
        self,
        mapping: Mapping[Union[str, Symbol], Union['Expr', Rational]],
        formal_inverse: bool = True,
    ) -> 'Expr':
        """Simultaneous substitution of symbols by expressions.

        Negative integer powers of a multi-term image become powers of an
        auxiliary inverse symbol when ``formal_inverse`` is set.
        """
        images: Dict[Symbol, Expr] = {}
        for k, v in mapping.items():
            images[symbol(k) if isinstance(k, str) else k] = (
                v if isinstance(v, Expr) else Expr.const(v)
            )
        if not images:
            return self
        power_cache: Dict[Tuple[Symbol, Exponent], Expr] = {}
        result = Expr()
        for key, coeff in self._terms.items():
            term = Expr({(): coeff})
            kept: List[Tuple[Symbol, Exponent]] = []
            for s, e in key:
                factor = _substituted_power(s, e, images, power_cache, formal_inverse)
                if factor is None:
                    kept.append((s, e))
                else:
                    term = term * factor
            if kept:
                term = term * Expr({tuple(kept): Fraction(1)})
            result = result + term
        if len(result.auxiliaries()) > 1:
            raise UnsupportedSideRelation(
                "substitution produced inverses of more than one denominator"
            )
        return result

    def evaluate(self, point: Mapping[Union[str, Symbol], Number]) -> float:
        """Numeric value at a point; fractional powers use the positive branch."""
        values: Dict[Symbol, float] = {}
        for k, v in point.items():
            values[symbol(k) if isinstance(k, str) else k] = float(v)
        return _evaluate(self, values)

    # Printing

    def __str__(self) -> str:
        return to_text(self)

    def __repr__(self) -> str:
        return f"Expr({to_text(self)!r})"


def _rational_power(coeff: Fraction, n: Exponent) -> Fraction:
    if isinstance(n, int):
        if coeff == 0 and n < 0:
            raise DivisionByZero("negative power of zero coefficient")
        return coeff ** n
    if coeff == 1:
        return Fraction(1)
    if coeff <= 0:
        raise DomainError(f"fractional power {n} of non-positive coefficient {coeff}")
    num = _exact_root(coeff.numerator, n.denominator)
    den = _exact_root(coeff.denominator, n.denominator)
    if num is None or den is None:
        raise DomainError(f"{coeff}^{n} is not rational")
    return Fraction(num, den) ** n.numerator


def _exact_root(value: int, k: int) -> Optional[int]:
    root = _integer_root(value, k)
    return root if root ** k == value else None


def _integer_root(value: int, k: int) -> int:
    """Largest ``r`` with ``r ** k <= value``; Newton from a bit-length guess."""
    if value < 2 or k == 1:
        return value
    x = 1 << -(-value.bit_length() // k)
    while True:
        y = ((k - 1) * x + value // x ** (k - 1)) // k
        if y >= x:
            return x
        x = y


@lru_cache(maxsize=256)
def inverse_symbol(denominator: Expr) -> Symbol:
    """The auxiliary symbol ``u`` with side relation ``u * denominator = 1``."""
    if denominator.is_monomial or denominator.is_empty:
        raise ValueError("inverse symbols are only introduced for sums")
    return Symbol('u', SymbolKind.AUXILIARY, None, denominator)


def _substituted_power(
    s: Symbol,
    e: Exponent,
    images: Mapping[Symbol, Expr],
    cache: Dict[Tuple[Symbol, Exponent], Expr],
    formal_inverse: bool,
) -> Optional[Expr]:
    cached = cache.get((s, e))
    if cached is not None:
        return cached
    image = images.get(s)
    if image is None:
        if not (s.is_auxiliary and s.denominator is not None):
            return None
        den_symbols = set(s.denominator.free_symbols())
        if not den_symbols.intersection(images):
            return None
        new_den = s.denominator.substitute(images, formal_inverse)
        factor = _inverse_power(new_den, e, s.name, formal_inverse)
    elif isinstance(e, int) and e >= 0:
        factor = image ** e
    elif image.is_monomial:
        factor = image ** e
    elif isinstance(e, int):
        factor = _inverse_power(image, -e, s.name, formal_inverse)
    else:
        raise NonMonomialNegativePower(
            f"fractional power {e} of {s.name} maps to a sum"
        )
    cache[(s, e)] = factor
    return factor


def _inverse_power(den: Expr, e: Exponent, name: str, formal_inverse: bool) -> Expr:
    if den.is_monomial or den.is_empty:
        return den ** -e
    if not formal_inverse:
        raise NonMonomialNegativePower(f"negative power of {name} maps to a sum")
    if not isinstance(e, int):
        raise NonMonomialNegativePower(f"fractional power of {name} maps to a sum")
    return Expr.sym(inverse_symbol(den), e)


def clear_inverse(a: Expr) -> Expr:
    """Multiply out the inverse symbol: returns ``a * S**k`` with ``u`` eliminated.

    The result vanishes exactly when ``a`` vanishes under ``u * S = 1``.
    """
    aux = a.auxiliaries()
    if not aux:
        return a
    if len(aux) > 1:
        raise UnsupportedSideRelation(
            "expression mixes inverses of different denominators"
        )
    u = aux[0]
    assert u.denominator is not None
    groups = a.group_by(lambda s: s == u)
    powers: Dict[Key, Exponent] = {k: (k[0][1] if k else 0) for k in groups}
    if any(not isinstance(e, int) for e in powers.values()):
        raise UnsupportedSideRelation("fractional power of an inverse symbol")
    top = max(powers.values())
    result = Expr()
    for k, rest in groups.items():
        result = result + rest * u.denominator ** (top - powers[k])
    return result


def _evaluate(a: Expr, values: Dict[Symbol, float]) -> float:
    missing = [
        s.name for s in a.free_symbols()
        if s not in values and not s.is_auxiliary
    ]
    if missing:
        raise UnboundParameter(missing)
    aux_values: Dict[Symbol, float] = {}
    for s in a.auxiliaries():
        if s in values:
            aux_values[s] = values[s]
            continue
        assert s.denominator is not None
        den = _evaluate(s.denominator, values)
        if den == 0.0:
            raise DivisionByZero(f"inverse of {s.denominator} at a zero")
        aux_values[s] = 1.0 / den
    total = 0.0
    for key, coeff in a.items():
        term = float(coeff)
        for s, e in key:
            base = aux_values[s] if s.is_auxiliary else values[s]
            if isinstance(e, int):
                if base == 0.0 and e < 0:
                    raise DivisionByZero(f"negative power of {s.name} at zero")
                term *= base ** e
            else:
                if base <= 0.0:
                    raise DomainError(
                        f"fractional power of {s.name} at non-positive value {base}"
                    )
                term *= math.pow(base, float(e))
        total += term
    return total


# Module-level operations

def add(a: Expr, b: Expr) -> Expr:
    return a + b


def mul(a: Expr, b: Expr) -> Expr:
    return a * b


def pow(a: Expr, n: Exponent) -> Expr:  # noqa: A001
    return a ** n


def scale(a: Expr, r: Rational) -> Expr:
    return a.scale(r)


def diff(a: Expr, s: Union[str, Symbol]) -> Expr:
    return a.diff(s)


def substitute(
    a: Expr,
    mapping: Mapping[Union[str, Symbol], Union[Expr, Rational]],
    formal_inverse: bool = True,
) -> Expr:
    return a.substitute(mapping, formal_inverse)


def is_zero(a: Expr) -> bool:
    return a.is_zero()


def equal(a: Expr, b: Expr) -> bool:
    return (a - b).is_zero()


def evaluate(a: Expr, point: Mapping[Union[str, Symbol], Number]) -> float:
    return a.evaluate(point)


def sym(name: str, exponent: Exponent = 1) -> Expr:
    return Expr.sym(name, exponent)


def const(value: Rational) -> Expr:
    return Expr.const(value)


def sum_exprs(parts: Iterable[Expr]) -> Expr:
    total = Expr()
    for part in parts:
        total = total + part
    return total


def generators() -> Tuple[Expr, ...]:
    """``(Jp, Jm, J3, Ap, Am, M)`` as expressions."""
    return tuple(Expr.sym(name) for name in GENERATOR_NAMES)


# Printer

def _format_exponent(e: Exponent) -> str:
    if isinstance(e, int) and e > 0:
        return str(e)
    return f"({e})"


def _format_key(key: Key) -> List[str]:
    parts = []
    for s, e in key:
        if s.denominator is not None:
            parts.append(f"({to_text(s.denominator)})^{_format_exponent(-e)}")
        elif e == 1:
            parts.append(s.name)
        else:
            parts.append(f"{s.name}^{_format_exponent(e)}")
    return parts


def to_text(a: Expr) -> str:
    """Deterministic text in the expression grammar."""
    if a.is_empty:
        return '0'
    pieces: List[str] = []
    for i, m in enumerate(a.terms):
        coeff = m.coefficient
        sign = '-' if coeff < 0 else '+'
        magnitude = abs(coeff)
        factors = _format_key(m.exponents)
        if magnitude != 1 or not factors:
            factors.insert(0, str(magnitude))
        body = '*'.join(factors)
        if i == 0:
            pieces.append(body if sign == '+' else f"-{body}")
        else:
            pieces.append(f" {sign} {body}")
    return ''.join(pieces)


def momentum_degree(a: Expr) -> Exponent:
    return a.degree_in(lambda s: s.kind is SymbolKind.MOMENTUM)


def positions_and_momenta(a: Expr) -> Sequence[Symbol]:
    return [
        s for s in a.free_symbols()
        if s.kind in (SymbolKind.POSITION, SymbolKind.MOMENTUM)
    ]
