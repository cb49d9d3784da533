"""
Compile exact expressions into numeric evaluators.

Each expression becomes the source of a small Python function over the
state vector ``x = (q1..qN, p1..pN)``; the functions accept a single state
or a ``(2N, m)`` array of states. Gradients are generated from the exact
symbolic derivatives, never from finite differences.
"""

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from hhtk.algebra.symexpr import Expr, Symbol, SymbolKind, canonical_symbols
from hhtk.errors import SingularApproach, UnboundParameter, UnknownSymbol
from hhtk.models.realize import NDSystem

logger = logging.getLogger(__name__)

EPSILON_SINGULAR = 1e-8

Evaluator = Callable[[np.ndarray], Union[float, np.ndarray]]
ParameterValues = Mapping[str, Union[int, Fraction, float]]


def _zero(x: np.ndarray) -> Union[float, np.ndarray]:
    return 0.0 * np.asarray(x[0], dtype=float)


def _stack(parts: Sequence[object], x: np.ndarray) -> np.ndarray:
    shape = np.shape(x)[1:]
    return np.array([np.broadcast_to(np.asarray(v, dtype=float), shape) for v in parts])


_NAMESPACE = {'np': np, '_zero': _zero, '_stack': _stack}


@dataclass(frozen=True)
class SingularGuard:
    """A quantity that must stay away from zero along a run.

    ``positive`` guards (bases of fractional powers, sum denominators) must
    exceed epsilon; the others must exceed it in absolute value.
    """

    label: str
    source: str
    positive: bool
    func: Evaluator = field(compare=False, repr=False)

    def margin(self, x: np.ndarray) -> float:
        value = float(self.func(x))
        return value if self.positive else abs(value)


@dataclass(frozen=True)
class CompiledField:
    """Numeric Hamiltonian vector field plus the quantities monitored along runs."""

    n: int
    hamiltonian: Expr
    energy_fn: Evaluator = field(repr=False)
    dq_fn: Evaluator = field(repr=False)
    dp_fn: Evaluator = field(repr=False)
    quantities: Dict[str, Evaluator] = field(default_factory=dict, repr=False)
    guards: Tuple[SingularGuard, ...] = ()
    separable: bool = True
    source: str = field(default='', repr=False)
    epsilon: float = EPSILON_SINGULAR

    @property
    def dimension(self) -> int:
        return 2 * self.n

    def energy(self, x: np.ndarray) -> float:
        return float(self.energy_fn(np.asarray(x, dtype=float)))

    def force(self, x: np.ndarray) -> np.ndarray:
        """``-dH/dq``."""
        return -np.asarray(self.dq_fn(np.asarray(x, dtype=float)))

    def velocity(self, x: np.ndarray) -> np.ndarray:
        """``dH/dp``."""
        return np.asarray(self.dp_fn(np.asarray(x, dtype=float)))

    def gradient(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.concatenate([self.dq_fn(x), self.dp_fn(x)])

    def vector_field(self, t: float, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.concatenate([self.dp_fn(x), -np.asarray(self.dq_fn(x))])

    def quantity(self, name: str, x: np.ndarray) -> Union[float, np.ndarray]:
        return self.quantities[name](np.asarray(x, dtype=float))

    def guard_margin(self, x: np.ndarray) -> float:
        if not self.guards:
            return float('inf')
        return min(g.margin(x) for g in self.guards)

    def admissible(self, x: np.ndarray) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(np.isfinite(x))) and self.guard_margin(x) >= self.epsilon

    def check(self, x: np.ndarray) -> None:
        """Raise SingularApproach if a guard is closer to zero than epsilon."""
        for g in self.guards:
            if g.margin(x) < self.epsilon:
                raise SingularApproach(f"{g.label} = {g.margin(x):.3e} below {self.epsilon:g}")


# Source generation

def _variable_names(n: int) -> Dict[Symbol, str]:
    qs, ps = canonical_symbols(n)
    return {s: s.name for s in qs + ps}


def _power(name: str, e: object) -> str:
    if e == 1:
        return name
    if isinstance(e, int):
        return f"{name}**{e}" if e > 0 else f"{name}**({e})"
    return f"{name}**{float(e)!r}"  # type: ignore[arg-type]


def expr_source(e: Expr, names: Mapping[Symbol, str]) -> str:
    """Python source for ``e`` over the local variable names."""
    if e.is_empty:
        return '0.0'
    pieces = []
    for m in e.terms:
        factors = [repr(float(m.coefficient))]
        for s, exp in m.exponents:
            if s not in names:
                raise UnknownSymbol(f"symbol {s.name} has no numeric binding")
            factors.append(_power(names[s], exp))
        pieces.append('*'.join(factors))
    return '(' + ' + '.join(pieces) + ')'


def _prologue(aux: Optional[Symbol], names: Dict[Symbol, str]) -> List[str]:
    lines = [f"    {name} = x[{i}]" for i, name in enumerate(names.values())]
    if aux is not None:
        assert aux.denominator is not None
        lines.append(f"    u0 = 1.0 / {expr_source(aux.denominator, names)}")
    return lines


def _build(fname: str, bodies: List[str], n: int, aux: Optional[Symbol], vector: bool) -> Tuple[Evaluator, str]:
    names = _variable_names(n)
    lines = [f"def {fname}(x):"] + _prologue(aux, names)
    if vector:
        lines.append(f"    return _stack(({', '.join(bodies)},), x)")
    else:
        lines.append(f"    return {bodies[0]} + _zero(x)")
    source = '\n'.join(lines) + '\n'
    namespace: Dict[str, object] = dict(_NAMESPACE)
    exec(compile(source, f"<hhtk:{fname}>", 'exec'), namespace)  # noqa: S102
    return namespace[fname], source  # type: ignore[return-value]


def _names_with_aux(n: int, exprs: Sequence[Expr]) -> Tuple[Dict[Symbol, str], Optional[Symbol]]:
    names = _variable_names(n)
    aux = {s for e in exprs for s in e.auxiliaries()}
    if len(aux) > 1:
        raise UnknownSymbol('expressions use inverses of more than one denominator')
    u = next(iter(aux), None)
    if u is not None:
        names[u] = 'u0'
    return names, u


def compile_expr(e: Expr, n: int, fname: str = 'quantity') -> Evaluator:
    """Evaluator for a single expression with every parameter already bound."""
    _check_bound([e], n)
    names, aux = _names_with_aux(n, [e])
    func, _ = _build(fname, [expr_source(e, names)], n, aux, vector=False)
    return func


def _check_bound(exprs: Sequence[Expr], n: int) -> None:
    unbound = sorted({
        s.name for e in exprs for s in e.free_symbols()
        if s.kind is SymbolKind.PARAMETER
    })
    if unbound:
        raise UnboundParameter(unbound)
    for e in exprs:
        for s in e.free_symbols():
            if s.kind in (SymbolKind.POSITION, SymbolKind.MOMENTUM) and not (
                s.index is not None and 1 <= s.index <= n
            ):
                raise UnknownSymbol(f"{s.name} is outside the {n}-dimensional phase space")
            if s.kind is SymbolKind.GENERATOR:
                raise UnknownSymbol(f"generator {s.name} must be realized before compiling")


def bind_parameters(e: Expr, values: Optional[ParameterValues]) -> Expr:
    """Substitute numeric parameter values; floats are taken at their decimal value."""
    if not values:
        return e
    present = {s.name for s in e.free_symbols() if s.kind is SymbolKind.PARAMETER}
    mapping: Dict[str, Union[Expr, Fraction, int]] = {}
    for name, value in values.items():
        if name not in present:
            continue
        if isinstance(value, float):
            mapping[name] = Fraction(repr(value))
        elif isinstance(value, Expr):
            mapping[name] = value
        else:
            mapping[name] = value
    return e.substitute(mapping) if mapping else e


def complete_parameters(exprs: Sequence[Expr], values: Optional[ParameterValues]) -> Dict[str, object]:
    """Bind every parameter left unspecified to zero."""
    out: Dict[str, object] = dict(values or {})
    missing = sorted({
        s.name for e in exprs for s in e.free_symbols()
        if s.kind is SymbolKind.PARAMETER and s.name not in out
    })
    if missing:
        logger.info(f"Unbound parameters set to 0: {', '.join(missing)}")
        out.update({name: 0 for name in missing})
    return out


def singular_guards(exprs: Sequence[Expr], n: int) -> Tuple[SingularGuard, ...]:
    """Guards for symbols raised to negative or fractional powers, and for inverse sums."""
    names, aux = _names_with_aux(n, exprs)
    nonzero: Dict[Symbol, bool] = {}
    for e in exprs:
        for key, _ in e.items():
            for s, exp in key:
                if s.is_auxiliary or s not in names:
                    continue
                if not isinstance(exp, int):
                    nonzero[s] = True
                elif exp < 0:
                    nonzero.setdefault(s, False)
    guards = []
    for s in sorted(nonzero, key=lambda t: t.sort_key):
        positive = nonzero[s]
        source = names[s]
        func, _ = _build(f"guard_{source}", [source], n, None, vector=False)
        guards.append(SingularGuard(source, source, positive, func))
    if aux is not None:
        assert aux.denominator is not None
        source = expr_source(aux.denominator, names)
        func, _ = _build('guard_denominator', [source], n, None, vector=False)
        guards.append(SingularGuard(f"1/u = {aux.denominator}", source, True, func))
    return tuple(guards)


def is_separable(h: Expr) -> bool:
    """True when no monomial mixes positions with momenta."""
    for key, _ in h.items():
        kinds = set()
        for s, _e in key:
            if s.kind is SymbolKind.MOMENTUM:
                kinds.add('p')
            elif s.kind in (SymbolKind.POSITION, SymbolKind.AUXILIARY):
                kinds.add('q')
        if len(kinds) > 1:
            return False
    return True


def compile_field(
    h: Expr,
    n: int,
    parameters: Optional[ParameterValues] = None,
    quantities: Optional[Mapping[str, Expr]] = None,
    epsilon: float = EPSILON_SINGULAR,
) -> CompiledField:
    """Compile ``H``, its exact gradient and the monitored quantities.

    Raises:
        UnboundParameter: if a parameter has no value
    """
    h = bind_parameters(h, parameters)
    bound = {name: bind_parameters(e, parameters) for name, e in (quantities or {}).items()}
    bound.setdefault('H', h)
    _check_bound([h, *bound.values()], n)

    qs, ps = canonical_symbols(n)
    names, aux = _names_with_aux(n, [h])
    dq = [h.diff(q) for q in qs]
    dp = [h.diff(p) for p in ps]
    energy_fn, energy_src = _build('energy', [expr_source(h, names)], n, aux, vector=False)
    dq_fn, dq_src = _build('dH_dq', [expr_source(d, names) for d in dq], n, aux, vector=True)
    dp_fn, dp_src = _build('dH_dp', [expr_source(d, names) for d in dp], n, aux, vector=True)

    monitored = {name: compile_expr(e, n, f"quantity_{name}") for name, e in bound.items()}
    guards = singular_guards([h, *bound.values()], n)
    separable = is_separable(h)
    logger.debug(
        f"Compiled field N={n}: {len(h)} terms, {len(guards)} guards, "
        f"separable={separable}, quantities={sorted(monitored)}"
    )
    return CompiledField(
        n=n,
        hamiltonian=h,
        energy_fn=energy_fn,
        dq_fn=dq_fn,
        dp_fn=dp_fn,
        quantities=monitored,
        guards=guards,
        separable=separable,
        source='\n'.join([energy_src, dq_src, dp_src]),
        epsilon=epsilon,
    )


def field_for_system(
    system: NDSystem,
    parameters: Optional[ParameterValues] = None,
    epsilon: float = EPSILON_SINGULAR,
) -> CompiledField:
    """Compiled field of a realized system, monitoring H, I and every C^(m)."""
    exprs = [e for _, e in system.members()]
    values = complete_parameters(exprs, parameters)
    return compile_field(
        system.h,
        system.spec.n,
        values,  # type: ignore[arg-type]
        dict(system.members()),
        epsilon,
    )
