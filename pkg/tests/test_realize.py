"""Tests for N-dimensional realizations."""

import random
import unittest

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hhtk.algebra.poisson import AM, AP, J3, JM, JP, M, BracketContext, bracket
from hhtk.algebra.symexpr import Expr, sym
from hhtk.errors import NoIntegral
from hhtk.models.catalog import make_classic_hh, make_holt, make_kdv, make_kdv_mr, make_kk, make_sk
from hhtk.models.realize import (
    MAX_SYMBOLIC_N,
    RealizationSpec,
    build_nd_model,
    casimir_chain_member,
    casimir_identity_check,
    functional_independence,
    realize,
    universal_integrals,
)

GENERATORS = ('Jp', 'Jm', 'J3', 'Ap', 'Am', 'M')


@st.composite
def generator_polynomials(draw, max_terms=2, max_exp=2):
    terms = draw(st.lists(
        st.tuples(
            st.integers(-3, 3),
            st.lists(st.tuples(st.sampled_from(GENERATORS), st.integers(1, max_exp)), min_size=1, max_size=2),
        ),
        min_size=1,
        max_size=max_terms,
    ))
    total = Expr()
    for coeff, factors in terms:
        term = Expr.const(coeff)
        for name, e in factors:
            term = term * sym(name) ** e
        total = total + term
    return total


class TestRealizationSpec(unittest.TestCase):
    """Generator images and argument checks."""

    def test_plane(self):
        """N = 2 without centrifugal terms is the plane realization."""
        images = RealizationSpec.plain(2).generator_map()
        self.assertEqual(images[JP], sym('p1', 2))
        self.assertEqual(images[JM], sym('q1', 2))
        self.assertEqual(images[J3], sym('q1') * sym('p1'))
        self.assertEqual(images[AP], sym('p2'))
        self.assertEqual(images[AM], sym('q2'))
        self.assertEqual(images[M], Expr.const(1))

    def test_centrifugal_images(self):
        """Jp picks up b_i / q_i^2 for the first N - 1 pairs."""
        images = RealizationSpec.symbolic(3).generator_map()
        expected = sym('p1', 2) + sym('p2', 2) + sym('b1') * sym('q1', -2) + sym('b2') * sym('q2', -2)
        self.assertEqual(images[JP], expected)
        self.assertEqual(images[AM], sym('q3'))

    def test_labels(self):
        """Plain specs print as zero."""
        self.assertEqual(RealizationSpec.plain(4).label(), 'zero')
        self.assertEqual(RealizationSpec.with_values(3, [1, 2]).label(), '1,2')

    def test_argument_checks(self):
        """N must be at least two with N - 1 constants."""
        with self.assertRaises(ValueError):
            RealizationSpec.plain(1)
        with self.assertRaises(ValueError):
            RealizationSpec.with_values(3, [1])

    def test_realize_casimir_in_plane(self):
        """Jp Jm - J3^2 vanishes in two dimensions."""
        c = sym('Jp') * sym('Jm') - sym('J3') ** 2
        self.assertTrue(realize(c, RealizationSpec.plain(2)).is_empty)

    def test_realization_is_a_homomorphism(self):
        """Images of generators satisfy the abstract commutation relations."""
        abstract = BracketContext.abstract()
        names = (JP, JM, J3, AP, AM)
        for n in (2, 3, 4):
            spec = RealizationSpec.symbolic(n)
            images = spec.generator_map()
            canonical = BracketContext.canonical(n)
            for a in names:
                for b in names:
                    with self.subTest(n=n, a=a.name, b=b.name):
                        lhs = bracket(images[a], images[b], canonical)
                        rhs = realize(bracket(Expr.sym(a), Expr.sym(b), abstract), spec)
                        self.assertTrue((lhs - rhs).is_zero())

    @settings(max_examples=60, derandomize=True, deadline=None)
    @given(st.sampled_from((2, 3, 4)), generator_polynomials(), generator_polynomials())
    def test_bracket_of_polynomials(self, n, f, g):
        """Realizing commutes with the bracket on generator polynomials."""
        spec = RealizationSpec.symbolic(n)
        lhs = bracket(realize(f, spec), realize(g, spec), BracketContext.canonical(n))
        rhs = realize(bracket(f, g, BracketContext.abstract()), spec)
        self.assertTrue((lhs - rhs).is_zero())


class TestUniversalIntegrals(unittest.TestCase):
    """The Casimir chain C2 .. C_{N-1}."""

    def test_counts(self):
        """N - 2 universal integrals."""
        self.assertEqual(universal_integrals(RealizationSpec.plain(2)).integrals, [])
        named = universal_integrals(RealizationSpec.plain(4)).named()
        self.assertEqual([name for name, _ in named], ['C2', 'C3'])

    def test_angular_momentum(self):
        """Without centrifugal terms C2 is (q1 p2 - q2 p1)^2."""
        c2 = casimir_chain_member(RealizationSpec.plain(3), 2)
        self.assertEqual(c2, (sym('q1') * sym('p2') - sym('q2') * sym('p1')) ** 2)

    def test_identity(self):
        """The sl(2) Casimir realizes to the top chain member plus sum b_i."""
        specs = (
            RealizationSpec.plain(2),
            RealizationSpec.symbolic(2),
            RealizationSpec.symbolic(3),
            RealizationSpec.symbolic(4),
            RealizationSpec.with_values(4, [1, 2, 3]),
        )
        for spec in specs:
            with self.subTest(n=spec.n):
                self.assertTrue(casimir_identity_check(spec).passed, spec.label())


class TestBuildNDModel(unittest.TestCase):
    """Realized models and their certificates."""

    def test_kdv_three_degrees(self):
        """KdV with symbolic centrifugal terms is Liouville integrable for N = 3."""
        system = build_nd_model(make_kdv(), RealizationSpec.symbolic(3))
        self.assertEqual([name for name, _ in system.members()], ['H', 'I', 'C2'])
        for cert in system.certify():
            with self.subTest(pair=cert.label):
                self.assertTrue(cert.passed, cert.to_report())

    @pytest.mark.slow
    def test_sk_four_degrees(self):
        """SK certificates hold for N = 4."""
        system = build_nd_model(make_sk(), RealizationSpec.with_values(4, [1, 2, 3]))
        self.assertTrue(all(cert.passed for cert in system.certify()))

    @pytest.mark.slow
    def test_kdv_four_degrees_symbolic(self):
        """Every pair among H, I, C2 and C3 commutes with symbolic b1, b2, b3."""
        system = build_nd_model(make_kdv(), RealizationSpec.symbolic(4))
        self.assertEqual([name for name, _ in system.members()], ['H', 'I', 'C2', 'C3'])
        self.assertTrue(all(cert.passed for cert in system.certify()))

    def check_families(self, n):
        families = (make_sk(), make_kk(), make_holt(), make_kdv_mr(2, 1))
        chain = [f"C{m}" for m in range(2, n)]
        for model in families:
            system = build_nd_model(model, RealizationSpec.symbolic(n))
            self.assertEqual([name for name, _ in system.members()], ['H', 'I', *chain])
            for cert in system.certify():
                with self.subTest(model=model.model_id, pair=cert.label):
                    self.assertTrue(cert.passed, cert.to_report())

    @pytest.mark.slow
    def test_families_three_degrees_symbolic(self):
        """SK, KK, Holt and the combined family commute with symbolic b1, b2."""
        self.check_families(3)

    @pytest.mark.slow
    def test_families_four_degrees_symbolic(self):
        """Every pair commutes for N = 4 with symbolic b1, b2, b3."""
        self.check_families(4)

    def test_no_integral(self):
        """Non-integrable models need allow_quasi."""
        with self.assertRaises(NoIntegral):
            build_nd_model(make_classic_hh(), RealizationSpec.plain(3))
        system = build_nd_model(make_classic_hh(), RealizationSpec.plain(3), allow_quasi=True)
        self.assertTrue(system.quasi)
        self.assertEqual([name for name, _ in system.members()], ['H', 'C2'])

    def test_functional_independence(self):
        """H, I and C2 have independent gradients."""
        system = build_nd_model(make_kdv(1, 0, 1, 0), RealizationSpec.with_values(3, [1, 1]))
        self.assertEqual(functional_independence(system, random.Random(5)), 3)

    def test_symbolic_cap(self):
        """Symbolic certification is capped."""
        self.assertEqual(MAX_SYMBOLIC_N, 6)


if __name__ == '__main__':
    unittest.main()
