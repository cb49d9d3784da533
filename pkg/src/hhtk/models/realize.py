"""
Symplectic realizations of sl(2,R) + h3 and the N-dimensional systems they produce.

    Jp = sum_{i<N} (p_i^2 + b_i / q_i^2)    Ap = p_N
    Jm = sum_{i<N} q_i^2                    Am = q_N
    J3 = sum_{i<N} q_i p_i                  M  = 1
"""

import itertools
import logging
import random
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import TYPE_CHECKING, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from hhtk.algebra.poisson import (
    AM,
    AP,
    J3,
    JM,
    JP,
    M,
    BracketContext,
    Certificate,
    certify_involution,
    random_point,
    sl2_casimir,
)
from hhtk.algebra.symexpr import Expr, Symbol, canonical_symbols, sum_exprs
from hhtk.errors import NoIntegral

if TYPE_CHECKING:
    from hhtk.models.catalog import ModelInstance

logger = logging.getLogger(__name__)

# Symbolic certification cap; larger N is supported numerically.
MAX_SYMBOLIC_N = 6

CentrifugalValue = Union[int, Fraction, Expr]


@dataclass(frozen=True)
class RealizationSpec:
    """Number of degrees of freedom and centrifugal constants ``b_1..b_{N-1}``."""

    n: int
    b: Tuple[Expr, ...] = ()

    def __post_init__(self) -> None:
        if self.n < 2:
            raise ValueError(f"realizations need N >= 2, got {self.n}")
        if len(self.b) != self.n - 1:
            raise ValueError(f"expected {self.n - 1} centrifugal constants, got {len(self.b)}")

    @classmethod
    def plain(cls, n: int) -> 'RealizationSpec':
        return cls(n, tuple(Expr() for _ in range(n - 1)))

    @classmethod
    def symbolic(cls, n: int) -> 'RealizationSpec':
        return cls(n, tuple(Expr.sym(f"b{i}") for i in range(1, n)))

    @classmethod
    def with_values(cls, n: int, values: Sequence[CentrifugalValue]) -> 'RealizationSpec':
        return cls(n, tuple(v if isinstance(v, Expr) else Expr.const(v) for v in values))

    @property
    def is_plain(self) -> bool:
        return all(b.is_empty for b in self.b)

    def label(self) -> str:
        if self.is_plain:
            return 'zero'
        return ','.join(str(b) for b in self.b)

    def generator_map(self) -> Dict[Symbol, Expr]:
        qs, ps = canonical_symbols(self.n)
        inner = range(self.n - 1)
        jp = sum_exprs(
            Expr.sym(ps[i]) ** 2 + self.b[i] * Expr.sym(qs[i], -2) for i in inner
        )
        jm = sum_exprs(Expr.sym(qs[i]) ** 2 for i in inner)
        j3 = sum_exprs(Expr.sym(qs[i]) * Expr.sym(ps[i]) for i in inner)
        return {
            JP: jp,
            JM: jm,
            J3: j3,
            AP: Expr.sym(ps[-1]),
            AM: Expr.sym(qs[-1]),
            M: Expr.const(1),
        }


def realize(e: Expr, spec: RealizationSpec, formal_inverse: bool = True) -> Expr:
    """Image of a generator expression in canonical variables."""
    return e.substitute(spec.generator_map(), formal_inverse=formal_inverse)


@dataclass
class UniversalIntegrals:
    spec: RealizationSpec
    integrals: List[Expr] = field(default_factory=list)

    def named(self) -> List[Tuple[str, Expr]]:
        return [(f"C{m}", c) for m, c in enumerate(self.integrals, start=2)]


def casimir_chain_member(spec: RealizationSpec, m: int) -> Expr:
    """``C^(m)``: squared angular momenta of the first ``m`` pairs plus centrifugal cross terms."""
    qs, ps = canonical_symbols(spec.n)
    total = Expr()
    for i, j in itertools.combinations(range(m), 2):
        qi, qj, pi, pj = (Expr.sym(s) for s in (qs[i], qs[j], ps[i], ps[j]))
        total = total + (qi * pj - qj * pi) ** 2
        total = total + spec.b[i] * qj ** 2 * qi ** -2 + spec.b[j] * qi ** 2 * qj ** -2
    return total


def universal_integrals(spec: RealizationSpec) -> UniversalIntegrals:
    """``C^(2) .. C^(N-1)``; empty for ``N = 2``."""
    return UniversalIntegrals(
        spec, [casimir_chain_member(spec, m) for m in range(2, spec.n)]
    )


def casimir_identity_check(spec: RealizationSpec) -> Certificate:
    """Certify ``realize(Jp*Jm - J3^2) = C^(N-1) + sum b_i``."""
    start = time.perf_counter()
    lhs = realize(sl2_casimir(), spec)
    rhs = casimir_chain_member(spec, spec.n - 1) + sum_exprs(spec.b)
    diff = lhs - rhs
    return Certificate(
        label='C_sl2 identity',
        mode=f"canonical(N={spec.n})",
        residual=Expr() if diff.is_zero() else diff,
        elapsed=time.perf_counter() - start,
        n=spec.n,
    )


@dataclass
class NDSystem:
    """Realized Hamiltonian, integral and universal integrals for one model."""

    model_id: str
    spec: RealizationSpec
    h: Expr
    i: Optional[Expr]
    casimirs: List[Expr]
    quasi: bool = False

    def members(self) -> List[Tuple[str, Expr]]:
        out = [('H', self.h)]
        if self.i is not None:
            out.append(('I', self.i))
        out.extend((f"C{m}", c) for m, c in enumerate(self.casimirs, start=2))
        return out

    def certify(self) -> List[Certificate]:
        """Exact certificates for every pair of members."""
        ctx = BracketContext.canonical(self.spec.n)
        certificates = []
        for (na, a), (nb, b) in itertools.combinations(self.members(), 2):
            certificates.append(
                certify_involution(a, b, ctx, label=f"{na},{nb}", model=self.model_id)
            )
        return certificates


def build_nd_model(
    model: 'ModelInstance',
    spec: RealizationSpec,
    allow_quasi: bool = False,
) -> NDSystem:
    """Realize a catalog model in ``N`` degrees of freedom.

    Raises:
        NoIntegral: if the model carries no integral and ``allow_quasi`` is False
    """
    if model.abstract_i is None and not allow_quasi:
        raise NoIntegral(f"model {model.model_id} has no integral")
    logger.info(f"Realizing {model.model_id} with N={spec.n}, b={spec.label()}")
    h = realize(model.abstract_h, spec)
    i = realize(model.abstract_i, spec) if model.abstract_i is not None else None
    return NDSystem(
        model_id=model.model_id,
        spec=spec,
        h=h,
        i=i,
        casimirs=universal_integrals(spec).integrals,
        quasi=model.abstract_i is None,
    )


def functional_independence(
    system: NDSystem,
    rng: Optional[random.Random] = None,
    points: int = 5,
    parameter_values: Optional[Dict[str, float]] = None,
) -> int:
    """Smallest gradient-matrix rank of the members over random points."""
    rng = rng or random.Random(0)
    n = system.spec.n
    qs, ps = canonical_symbols(n)
    variables = qs + ps
    members = [e for _, e in system.members()]
    gradients = [[e.diff(v) for v in variables] for e in members]
    ranks = []
    for _ in range(points):
        point = random_point(members, n, rng, parameter_values)
        matrix = np.array([[g.evaluate(point) for g in row] for row in gradients])
        ranks.append(int(np.linalg.matrix_rank(matrix, tol=1e-9)))
    return min(ranks)
