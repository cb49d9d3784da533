"""
Catalog of integrable Henon-Heiles systems.

Every family is written once over the generators of sl(2,R) + h3; the
two-dimensional canonical forms are obtained from the realization
Jp = p1^2, Jm = q1^2, J3 = q1*p1, Ap = p2, Am = q2, M = 1.

Model identifiers:

    sk, kk, kdv, holt, generic, classic-hh, kdv-mr:M=<m>,R=<r>

Inline parameters may follow a colon, e.g. ``generic:beta=1``.
"""

import logging
from dataclasses import dataclass, replace
from fractions import Fraction
from math import comb
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

from hhtk.algebra.grammar import parse_expr
from hhtk.algebra.symexpr import Expr, generators, momentum_degree, sym
from hhtk.errors import BadDegrees, InexactValue, ParseError, UnknownModel
from hhtk.models.realize import RealizationSpec, realize

logger = logging.getLogger(__name__)

ParamValue = Union[None, int, Fraction, str, Expr]

HALF = Fraction(1, 2)


@dataclass(frozen=True)
class ModelInstance:
    """One member of a family with bound or symbolic parameters."""

    family: str
    model_id: str
    parameters: Dict[str, Expr]
    abstract_h: Expr
    abstract_i: Optional[Expr]
    realized_h: Expr
    realized_i: Optional[Expr]
    integrable_case: Optional[str] = None

    @property
    def has_integral(self) -> bool:
        return self.abstract_i is not None

    def integral_degree(self) -> int:
        if self.realized_i is None:
            return 0
        return int(momentum_degree(self.realized_i))


@dataclass(frozen=True)
class RamaniTable:
    degree: int
    abstract: Expr
    realized: Expr


def parse_value(text: Union[str, int, Fraction], exact: bool = True) -> Expr:
    """Parameter value from text: integers, ``p/q``, symbolic expressions.

    Decimal literals are converted exactly when ``exact`` is False and
    rejected otherwise.
    """
    if isinstance(text, (int, Fraction)):
        return Expr.const(text)
    text = text.strip()
    if any(ch in text for ch in '.eE') and _looks_numeric(text):
        if exact:
            raise InexactValue(f"decimal value {text!r} where an exact rational is required")
        return Expr.const(Fraction(text))
    try:
        return parse_expr(text)
    except ParseError as e:
        raise ParseError(f"bad parameter value {text!r}: {e}") from e


def _looks_numeric(text: str) -> bool:
    try:
        float(text)
        return True
    except ValueError:
        return False


def _param(value: ParamValue, name: str) -> Expr:
    if value is None:
        return sym(name)
    if isinstance(value, Expr):
        return value
    if isinstance(value, str):
        return parse_value(value)
    if isinstance(value, (int, Fraction)) and not isinstance(value, bool):
        return Expr.const(value)
    raise InexactValue(f"parameter {name} must be exact, got {value!r}")


def _coerce(value: object, name: str, exact: bool) -> Expr:
    if isinstance(value, str):
        return parse_value(value, exact)
    if isinstance(value, float):
        if exact:
            raise InexactValue(f"parameter {name}={value!r} must be an exact rational")
        return Expr.const(Fraction(repr(value)))
    return _param(value, name)  # type: ignore[arg-type]


def _instance(
    family: str,
    model_id: str,
    parameters: Dict[str, Expr],
    h: Expr,
    i: Optional[Expr],
    integrable_case: Optional[str] = None,
) -> ModelInstance:
    plane = RealizationSpec.plain(2)
    return ModelInstance(
        family=family,
        model_id=model_id,
        parameters=parameters,
        abstract_h=h,
        abstract_i=i,
        realized_h=realize(h, plane),
        realized_i=realize(i, plane) if i is not None else None,
        integrable_case=integrable_case,
    )


def ramani_potential(i: int, jm: Expr, am: Expr) -> Expr:
    """``V_i = sum_k 2^(i-2k) C(i-k, k) Jm^k Am^(i-2k)``."""
    if i < 0:
        raise BadDegrees(f"Ramani degree must be non-negative, got {i}")
    total = Expr()
    for k in range(i // 2 + 1):
        total = total + (jm ** k * am ** (i - 2 * k)).scale(2 ** (i - 2 * k) * comb(i - k, k))
    return total


def ramani(i: int) -> RamaniTable:
    """Homogeneous potential of degree ``i`` in abstract and realized form."""
    _, jm, _, _, am, _ = generators()
    q1, q2 = sym('q1'), sym('q2')
    return RamaniTable(i, ramani_potential(i, jm, am), ramani_potential(i, q1 ** 2, q2))


def _kinetic() -> Expr:
    jp, _, _, ap, _, _ = generators()
    return (jp + ap ** 2).scale(HALF)


def make_sk(delta: ParamValue = None, alpha: ParamValue = None, lam: ParamValue = None) -> ModelInstance:
    """Sawada-Kotera system with a centrifugal term; integral quartic in the momenta."""
    d, a, l = _param(delta, 'delta'), _param(alpha, 'alpha'), _param(lam, 'lambda')
    jp, jm, j3, ap, am, _ = generators()
    third = Fraction(1, 3)
    h = _kinetic() + d * (jm + am ** 2) + a * (jm * am + am ** 3 * third) + l / jm
    i = (
        jp * ap ** 2 * HALF
        + d * am * (d * am * jm + ap * j3) * 2
        + a * d * am * jm * (jm * third + am ** 2) * 2
        + a * (
            a * am ** 2 * jm * (am ** 2 * HALF + jm * third)
            + a * jm ** 3 * Fraction(1, 18)
            + am * j3 * (ap * am - j3 * Fraction(2, 3))
            + jm * third * (am * jp * 2 + ap * j3)
        )
        + l * (ap ** 2 / jm + a * am * Fraction(4, 3))
    )
    return _instance('SK', 'sk', {'delta': d, 'alpha': a, 'lambda': l}, h, i)


def make_kk(
    delta: ParamValue = None,
    alpha: ParamValue = None,
    lam: ParamValue = None,
    nu: ParamValue = None,
) -> ModelInstance:
    """Kaup-Kupershmidt system with two rational terms; integral quartic in the momenta."""
    d, a = _param(delta, 'delta'), _param(alpha, 'alpha')
    l, n = _param(lam, 'lambda'), _param(nu, 'nu')
    jp, jm, j3, ap, am, _ = generators()
    h = (
        _kinetic()
        + d * (jm + am ** 2 * 16)
        + a * (jm * am + am ** 3 * Fraction(16, 3))
        + l / jm
        + n * jm ** -3
    )
    i = (
        jp ** 2 * Fraction(3, 4)
        + d * (jm * (d * jm * 3 + jp) + j3 ** 2 * 2)
        + a * (
            jm * (am * jp - ap * j3)
            - a * jm ** 2 * (jm * Fraction(1, 6) + am ** 2)
            + am * (j3 ** 2 - d * jm ** 2) * 2
        )
        + l * (jm ** -1 * (jp + l / jm) * 3 + a * am * 2)
        + n * jm ** -2 * 3 * (a * am * 2 + d * 2 + jm ** -1 * (jp + l * jm ** -1 * 2 + n * jm ** -3))
    )
    return _instance('KK', 'kk', {'delta': d, 'alpha': a, 'lambda': l, 'nu': n}, h, i)


def make_kdv(
    delta: ParamValue = None,
    omega: ParamValue = None,
    alpha: ParamValue = None,
    lam: ParamValue = None,
) -> ModelInstance:
    """KdV system; integral quadratic in the momenta."""
    d, w = _param(delta, 'delta'), _param(omega, 'Omega')
    a, l = _param(alpha, 'alpha'), _param(lam, 'lambda')
    jp, jm, j3, ap, am, _ = generators()
    h = _kinetic() + d * (jm + am ** 2) + w * am ** 2 + a * (jm * am + am ** 3 * 2) + l / jm
    i = (
        d * (jp * Fraction(3, 2) + (d * 3 - w) * jm)
        - w * jp * HALF
        + a * (-am * jp + a * jm * (jm * Fraction(1, 4) + am ** 2) + ap * j3)
        + a * d * am * jm * 2
        + l / jm * (d * 3 - w - a * am * 2)
    )
    return _instance('KdV', 'kdv', {'delta': d, 'Omega': w, 'alpha': a, 'lambda': l}, h, i)


def make_kdv_mr(
    m: int,
    r: int,
    lam: ParamValue = None,
    alphas: Optional[Sequence[ParamValue]] = None,
    gammas: Optional[Sequence[ParamValue]] = None,
) -> ModelInstance:
    """KdV superposed with ``M`` Ramani potentials and ``R`` rational perturbations.

    Raises:
        BadDegrees: unless ``M > R >= 0`` and the coefficient lists match
    """
    if not (m > r >= 0):
        raise BadDegrees(f"combined family needs M > R >= 0, got M={m}, R={r}")
    alphas = list(alphas) if alphas is not None else [None] * m
    gammas = list(gammas) if gammas is not None else [None] * r
    if len(alphas) != m or len(gammas) != r:
        raise BadDegrees(f"expected {m} alpha and {r} gamma coefficients")
    l = _param(lam, 'lambda')
    a = [_param(v, f"a{k}") for k, v in enumerate(alphas, start=1)]
    g = [_param(v, f"g{k}") for k, v in enumerate(gammas, start=1)]
    jp, jm, j3, ap, am, _ = generators()

    def v(k: int) -> Expr:
        return ramani_potential(k, jm, am)

    h = _kinetic() + l / jm
    i = -am * jp + j3 * ap - l * am / jm * 2
    for k in range(1, m + 1):
        h = h + a[k - 1] * v(k)
        i = i + a[k - 1] * jm * v(k - 1)
    for k in range(1, r + 1):
        h = h + g[k - 1] * v(k) * jm ** -(k + 1)
        i = i - g[k - 1] * v(k + 1) * jm ** -(k + 1)
    params = {'lambda': l}
    params.update({f"a{k}": e for k, e in enumerate(a, start=1)})
    params.update({f"g{k}": e for k, e in enumerate(g, start=1)})
    return _instance('KdV_MR', f"kdv-mr:M={m},R={r}", params, h, i)


def ramani_superposition(m: int, alphas: Optional[Sequence[ParamValue]] = None) -> ModelInstance:
    """Pure Ramani series ``H_M`` with its quadratic integral."""
    return make_kdv_mr(m, 0, 0, alphas, [])


def hone_parameters(xi: Sequence[ParamValue]) -> Tuple[Expr, List[Expr]]:
    """Translate ``xi_0..xi_R`` to ``(lambda, [gamma_1..gamma_R])``.

    ``lambda = 2 xi_0`` and ``gamma_j = 2^(2j+1) xi_j``.
    """
    values = [_param(x, f"xi{j}") for j, x in enumerate(xi)]
    if not values:
        raise BadDegrees('at least xi0 is required')
    lam = values[0].scale(2)
    return lam, [values[j].scale(2 ** (2 * j + 1)) for j in range(1, len(values))]


def rational_family(r: int, c: ParamValue = None, xi: Optional[Sequence[ParamValue]] = None) -> ModelInstance:
    """Rational perturbations of the KdV case with coefficient ``c`` on ``q2``."""
    xi = list(xi) if xi is not None else [None] * (r + 1)
    if len(xi) != r + 1:
        raise BadDegrees(f"expected {r + 1} xi coefficients, got {len(xi)}")
    lam, gammas = hone_parameters(xi)
    m = max(3, r + 1)
    alphas: List[ParamValue] = [_param(c, 'c'), 0, Fraction(1, 8)] + [0] * (m - 3)
    return make_kdv_mr(m, r, lam, alphas, gammas)


def make_holt() -> ModelInstance:
    """Holt potential; exercises fractional exponents of ``q2``."""
    jp, jm, j3, ap, am, _ = generators()
    h = _kinetic() + am ** Fraction(-2, 3) * (jm + am ** 2 * Fraction(9, 2))
    i = (
        jp ** 2
        + jp * ap ** 2 * 2
        + am ** Fraction(1, 3) * ap * j3 * 24
        + am ** Fraction(-2, 3) * jp * jm * 4
        + am ** Fraction(2, 3) * jm * 72
    )
    return _instance('Holt', 'holt', {}, h, i)


def make_generic_hh(
    delta: ParamValue = None,
    omega: ParamValue = None,
    alpha: ParamValue = None,
    beta: ParamValue = None,
) -> ModelInstance:
    """Multiparametric Henon-Heiles Hamiltonian.

    The integral of the matching family is attached when ``(beta, Omega)``
    is one of the three integrable cases.
    """
    d, w = _param(delta, 'delta'), _param(omega, 'Omega')
    a, b = _param(alpha, 'alpha'), _param(beta, 'beta')
    jp, jm, j3, ap, am, _ = generators()
    h = _kinetic() + d * (jm + am ** 2) + w * am ** 2 + a * (jm * am + b * am ** 3)
    params = {'delta': d, 'Omega': w, 'alpha': a, 'beta': b}
    case, partner = _integrable_case(d, w, a, b)
    i = partner.abstract_i if partner is not None else None
    if case:
        logger.debug(f"Generic Henon-Heiles matches the {case} case")
    return _instance('GenericHH', 'generic', params, h, i, case)


def make_classic_hh(strength: ParamValue = 1) -> ModelInstance:
    """Original galactic model ``1/2 (p^2 + q^2) + s (q1^2 q2 - q2^3 / 3)``."""
    model = make_generic_hh(HALF, 0, strength, Fraction(-1, 3))
    return replace(model, model_id='classic-hh')


def _integrable_case(
    d: Expr, w: Expr, a: Expr, b: Expr
) -> Tuple[Optional[str], Optional[ModelInstance]]:
    if not b.is_constant:
        return None, None
    beta = b.constant_value()
    if beta == Fraction(1, 3) and w.is_zero():
        return 'SK', make_sk(d, a, 0)
    if beta == 2:
        return 'KdV', make_kdv(d, w, a, 0)
    if beta == Fraction(16, 3) and (w - d.scale(15)).is_zero():
        return 'KK', make_kk(d, a, 0, 0)
    return None, None


# Registry

@dataclass(frozen=True)
class FamilySpec:
    name: str
    model_id: str
    parameters: Tuple[str, ...]
    integral: str
    note: str = ''


FAMILIES: Tuple[FamilySpec, ...] = (
    FamilySpec('SK', 'sk', ('delta', 'alpha', 'lambda'), 'quartic', 'Sawada-Kotera'),
    FamilySpec('KK', 'kk', ('delta', 'alpha', 'lambda', 'nu'), 'quartic', 'Kaup-Kupershmidt'),
    FamilySpec('KdV', 'kdv', ('delta', 'Omega', 'alpha', 'lambda'), 'quadratic', 'Korteweg-de Vries'),
    FamilySpec(
        'KdV_MR', 'kdv-mr:M=<m>,R=<r>', ('lambda', 'a1..aM', 'g1..gR'), 'quadratic',
        'KdV with Ramani and rational series; requires M > R',
    ),
    FamilySpec('Holt', 'holt', (), 'quartic', 'Holt potential'),
    FamilySpec(
        'GenericHH', 'generic', ('delta', 'Omega', 'alpha', 'beta'), 'only integrable cases',
        'integrable for beta=1/3, Omega=0 (SK); beta=2 (KdV); beta=16/3, Omega=15*delta (KK)',
    ),
    FamilySpec('GenericHH', 'classic-hh', ('alpha',), 'none', 'delta=1/2, Omega=0, beta=-1/3'),
)

INTEGRABLE_CASES = (
    ('SK', '1/3', '0'),
    ('KdV', '2', 'arbitrary'),
    ('KK', '16/3', '15*delta'),
)


def parse_model_id(model_id: str) -> Tuple[str, Dict[str, str]]:
    """Split ``family:key=value,...`` into the family id and inline settings."""
    base, _, rest = model_id.strip().partition(':')
    inline: Dict[str, str] = {}
    if rest:
        for item in rest.split(','):
            key, sep, value = item.partition('=')
            if not sep:
                raise UnknownModel(f"bad inline setting {item!r} in {model_id!r}")
            inline[key.strip()] = value.strip()
    return base.strip().lower(), inline


def resolve_model(
    model_id: str,
    params: Optional[Mapping[str, ParamValue]] = None,
    exact: bool = True,
) -> ModelInstance:
    """Build a model from its identifier and parameter bindings.

    Unbound parameters stay symbolic.
    """
    base, inline = parse_model_id(model_id)
    raw: Dict[str, ParamValue] = dict(inline)
    raw.update(params or {})
    values: Dict[str, Expr] = {}
    for key, value in raw.items():
        if key in ('M', 'R'):
            continue
        values[key] = _coerce(value, key, exact)

    def take(*names: str) -> List[Optional[Expr]]:
        out = [values.pop(name, None) for name in names]
        return out

    if base == 'sk':
        model = make_sk(*take('delta', 'alpha', 'lambda'))
    elif base == 'kk':
        model = make_kk(*take('delta', 'alpha', 'lambda', 'nu'))
    elif base == 'kdv':
        model = make_kdv(*take('delta', 'Omega', 'alpha', 'lambda'))
    elif base == 'holt':
        model = make_holt()
    elif base == 'generic':
        model = make_generic_hh(*take('delta', 'Omega', 'alpha', 'beta'))
    elif base == 'classic-hh':
        (strength,) = take('alpha')
        model = make_classic_hh(strength if strength is not None else 1)
    elif base == 'kdv-mr':
        try:
            m, r = int(raw['M']), int(raw['R'])  # type: ignore[arg-type]
        except (KeyError, TypeError, ValueError) as e:
            raise UnknownModel(f"{model_id!r}: kdv-mr needs integer M and R") from e
        if not (m > r >= 0):
            raise BadDegrees(f"combined family needs M > R >= 0, got M={m}, R={r}")
        alphas = take(*(f"a{k}" for k in range(1, m + 1)))
        gammas = take(*(f"g{k}" for k in range(1, r + 1)))
        (lam,) = take('lambda')
        model = make_kdv_mr(m, r, lam, alphas, gammas)
    else:
        raise UnknownModel(f"unknown model {model_id!r}")

    if values:
        raise UnknownModel(
            f"parameters {', '.join(sorted(values))} do not belong to {model_id!r}"
        )
    return model


def catalog_listing(family: Optional[str] = None) -> List[Dict[str, str]]:
    """Rows describing every family, for table/json output."""
    rows = []
    for spec in FAMILIES:
        if family and family.lower() not in (spec.model_id.split(':')[0], spec.name.lower()):
            continue
        rows.append({
            'id': spec.model_id,
            'family': spec.name,
            'parameters': ', '.join(spec.parameters) or '-',
            'integral': spec.integral,
            'notes': spec.note,
        })
    return rows


def parameter_schema(family: str) -> Dict[str, object]:
    """Parameter names and integral type of one family, by name or id."""
    key = family.lower()
    for spec in FAMILIES:
        if key in (spec.model_id.split(':')[0], spec.name.lower()):
            return {
                'family': spec.name,
                'id': spec.model_id,
                'parameters': list(spec.parameters),
                'integral': spec.integral,
                'notes': spec.note,
            }
    raise UnknownModel(f"unknown family {family!r}")
