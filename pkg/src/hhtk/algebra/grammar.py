"""
Plain-text expression grammar.

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := ('-' | '+') unary | power
    power   := atom ('^' unary)?
    atom    := INT | NAME | '(' expr ')'

Literals are integers; ``p/q`` is ordinary division of two literals, so
rationals are exact. Exponents must reduce to rational constants. A negative
integer power of a sum, such as ``(q1^2 + q2^2)^(-1)``, is the inverse symbol
of that sum. The printer lives in ``symexpr.to_text`` and emits this same
grammar.
"""

import logging
from fractions import Fraction
from pathlib import Path
from typing import Union

from lark import Lark, Transformer, v_args
from lark.exceptions import LarkError, VisitError

from hhtk.algebra.symexpr import Expr, inverse_symbol, symbol, to_text
from hhtk.errors import HHTKError, ParseError

logger = logging.getLogger(__name__)

EXPR_GRAMMAR = r"""
    ?start: sum

    ?sum: product
        | sum "+" product   -> add
        | sum "-" product   -> sub

    ?product: unary
        | product "*" unary -> mul
        | product "/" unary -> div

    ?unary: power
        | "-" unary         -> neg
        | "+" unary

    ?power: atom
        | atom "^" unary    -> pow

    ?atom: INT              -> number
         | CNAME            -> name
         | "(" sum ")"

    %import common.INT
    %import common.CNAME
    %import common.WS
    %ignore WS
"""


@v_args(inline=True)
class ExprBuilder(Transformer):
    """Builds ``Expr`` values bottom-up from the parse tree."""

    def number(self, token) -> Expr:
        return Expr.const(int(token))

    def name(self, token) -> Expr:
        return Expr.sym(symbol(str(token)))

    def add(self, a: Expr, b: Expr) -> Expr:
        return a + b

    def sub(self, a: Expr, b: Expr) -> Expr:
        return a - b

    def mul(self, a: Expr, b: Expr) -> Expr:
        return a * b

    def div(self, a: Expr, b: Expr) -> Expr:
        if b.is_constant:
            return a / b.constant_value()
        return a * _power(b, -1)

    def neg(self, a: Expr) -> Expr:
        return -a

    def pow(self, base: Expr, exponent: Expr) -> Expr:
        if not exponent.is_constant:
            raise ParseError(f"exponent must be a rational constant, got {exponent}")
        return _power(base, _exponent(exponent.constant_value()))


def _exponent(value: Fraction) -> Union[int, Fraction]:
    return value.numerator if value.denominator == 1 else value


def _power(base: Expr, n: Union[int, Fraction]) -> Expr:
    """``base ** n``; negative integer powers of a sum become its inverse symbol."""
    if isinstance(n, int) and n < 0 and not base.is_monomial and not base.is_empty:
        return Expr.sym(inverse_symbol(base), -n)
    return base ** n


class ExprParser:
    def __init__(self) -> None:
        self.parser = Lark(EXPR_GRAMMAR, start='start', parser='lalr')
        self.builder = ExprBuilder()

    def parse(self, text: str) -> Expr:
        try:
            tree = self.parser.parse(text)
            return self.builder.transform(tree)
        except VisitError as e:
            if isinstance(e.orig_exc, HHTKError):
                raise e.orig_exc from None
            raise ParseError(str(e.orig_exc)) from e
        except LarkError as e:
            raise ParseError(f"cannot parse {text!r}: {e}") from e


_PARSER = None


def parse_expr(text: str) -> Expr:
    """Parse one expression in the toolkit grammar."""
    global _PARSER
    if _PARSER is None:
        _PARSER = ExprParser()
    return _PARSER.parse(text)


def read_expr(path: Union[str, Path]) -> Expr:
    """Read an expression file; ``#`` starts a comment, lines are joined."""
    lines = []
    for raw in Path(path).read_text(encoding='utf-8').splitlines():
        line = raw.split('#', 1)[0].strip()
        if line:
            lines.append(line)
    if not lines:
        raise ParseError(f"{path}: no expression found")
    logger.debug(f"Parsing expression from {path}")
    return parse_expr(' '.join(lines))


def format_expr(e: Expr) -> str:
    return to_text(e)
