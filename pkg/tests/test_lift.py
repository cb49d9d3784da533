"""Tests for lifting two-dimensional pairs to the abstract algebra."""

import unittest

import pytest

from hhtk.algebra.grammar import parse_expr
from hhtk.algebra.lift import (
    block_words,
    casimir_difference,
    lift_hamiltonian,
    lift_pair,
    lift_to_abstract,
)
from hhtk.algebra.symexpr import sym
from hhtk.errors import MathError, NotLiftable
from hhtk.models.catalog import make_holt, make_kdv, make_kk, make_sk
from hhtk.models.realize import RealizationSpec, realize

PLANE = RealizationSpec.plain(2)


class TestBlockWords(unittest.TestCase):
    """Generator words for (q1, p1) blocks."""

    def test_unique_blocks(self):
        """p1^2, q1^2, q1 p1 and q1^-2 have a single word."""
        self.assertEqual(block_words(0, 2), [(1, 0, 0)])
        self.assertEqual(block_words(2, 0), [(0, 1, 0)])
        self.assertEqual(block_words(1, 1), [(0, 0, 1)])
        self.assertEqual(block_words(-2, 0), [(0, -1, 0)])

    def test_ambiguous_block(self):
        """q1^2 p1^2 is either Jp Jm or J3^2."""
        self.assertEqual(block_words(2, 2), [(1, 1, 0), (0, 0, 2)])

    def test_not_liftable(self):
        """Odd powers of q1 alone have no word."""
        with self.assertRaises(NotLiftable):
            block_words(1, 0)
        with self.assertRaises(NotLiftable):
            block_words(2, 1)


class TestLiftHamiltonian(unittest.TestCase):
    """The Hamiltonian lift needs no unknowns."""

    def test_kdv(self):
        """The canonical KdV Hamiltonian lifts to its abstract form."""
        model = make_kdv()
        self.assertEqual(lift_hamiltonian(model.realized_h), model.abstract_h)

    def test_odd_power_rejected(self):
        """A term linear in q1 is not liftable."""
        with self.assertRaises(NotLiftable):
            lift_hamiltonian(parse_expr('1/2*p1^2 + 1/2*p2^2 + q1'))

    def test_foreign_symbols_rejected(self):
        """Generators and extra coordinates are outside the input language."""
        with self.assertRaises(NotLiftable):
            lift_hamiltonian(parse_expr('p3^2'))


class TestLiftPair(unittest.TestCase):
    """Lifting Hamiltonian and integral together."""

    def check_model(self, model):
        result = lift_to_abstract(model.realized_h, model.realized_i)
        self.assertTrue(result.certificate.passed)
        self.assertEqual(realize(result.i, PLANE), model.realized_i)
        self.assertIsNotNone(casimir_difference(result.i, model.abstract_i))
        return result

    def test_kdv(self):
        """The KdV pair lifts uniquely."""
        result = self.check_model(make_kdv())
        self.assertEqual(result.h, make_kdv().abstract_h)
        self.assertEqual(result.free_dimension, 0)
        self.assertIn('H,I', result.report())

    def test_lift_pair_shape(self):
        """lift_pair returns both forms and the solved system."""
        model = make_kdv(1, 0, 1, 0)
        h, i, system = lift_pair(model.realized_h, model.realized_i)
        self.assertEqual(h, model.abstract_h)
        self.assertIsNotNone(system.solution)

    @pytest.mark.slow
    def test_sawada_kotera(self):
        """The SK integral needs a multiple of the Casimir."""
        result = self.check_model(make_sk())
        self.assertGreaterEqual(result.rounds, 1)

    @pytest.mark.slow
    def test_kaup_kupershmidt(self):
        """The KK pair lifts with its rational terms."""
        self.check_model(make_kk())

    @pytest.mark.slow
    def test_holt(self):
        """Fractional powers of q2 pass through the lift."""
        self.check_model(make_holt())

    def test_free_block_takes_first_word(self):
        """An unconstrained block keeps the single word that comes first."""
        result = lift_to_abstract(sym('p2'), parse_expr('q1^2*p1^2'))
        self.assertEqual(result.free_dimension, 1)
        self.assertEqual(result.i, sym('Jp') * sym('Jm'))

    def test_non_commuting_pair(self):
        """A pair that cannot commute is reported as inconsistent or unliftable."""
        h = parse_expr('1/2*p1^2 + 1/2*p2^2 + q1^2*q2')
        with self.assertRaises(MathError):
            lift_to_abstract(h, sym('p2'))


if __name__ == '__main__':
    unittest.main()
