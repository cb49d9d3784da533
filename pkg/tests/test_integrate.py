"""Tests for the integrators and their calibration runs."""

import math
import unittest
from fractions import Fraction

import numpy as np
import pytest

from hhtk.algebra.grammar import parse_expr
from hhtk.dynamics.compile import compile_field, field_for_system
from hhtk.dynamics.integrate import (
    RunStatus,
    StepPolicy,
    convergence_ratio,
    drift_trend,
    integrate,
    relative_drift,
    reverse_momenta,
    reversibility_error,
)
from hhtk.errors import ConfigError, NonSeparable, SingularApproach
from hhtk.models.catalog import make_kdv
from hhtk.models.realize import RealizationSpec, build_nd_model

OSCILLATOR = parse_expr('1/2*p1^2 + 1/2*q1^2')
SINGULAR_DRIFT = parse_expr('1/2*p1^2 + 1/1000*q1^(2/3)')
KDV_X0 = (0.05, 0.05, 0.0, 0.0)


def kdv_field():
    system = build_nd_model(make_kdv('1/2', 0, '1/2', 0), RealizationSpec.plain(2))
    return field_for_system(system)


class TestStepPolicy(unittest.TestCase):
    """Validation of run settings."""

    def test_rejects_bad_values(self):
        """Unknown methods and non-positive steps are configuration errors."""
        with self.assertRaises(ConfigError):
            StepPolicy(method='euler')
        with self.assertRaises(ConfigError):
            StepPolicy(dt=0)
        with self.assertRaises(ConfigError):
            StepPolicy(sample_every=0)

    def test_halved(self):
        """Halving keeps the sampled times."""
        policy = StepPolicy(dt=0.01, sample_every=3).halved()
        self.assertEqual((policy.dt, policy.sample_every), (0.005, 6))


class TestVerlet(unittest.TestCase):
    """Stormer-Verlet on separable Hamiltonians."""

    def test_oscillator(self):
        """One period returns to the start; energy error stays O(dt^2)."""
        fld = compile_field(OSCILLATOR, 1)
        traj = integrate(fld, [1.0, 0.0], 2 * math.pi, StepPolicy(dt=1e-3))
        self.assertTrue(traj.completed)
        np.testing.assert_allclose(traj.final_state, [1.0, 0.0], atol=1e-5)
        self.assertLess(traj.max_drift('H'), 1e-6)

    def test_step_count(self):
        """The step is shortened so the run ends exactly at T."""
        fld = compile_field(OSCILLATOR, 1)
        traj = integrate(fld, [1.0, 0.0], 1.0, StepPolicy(dt=0.3))
        self.assertEqual(len(traj.times), 5)
        self.assertAlmostEqual(traj.times[-1], 1.0)

    def test_sampling(self):
        """sample_every thins the stored states but keeps the last one."""
        fld = compile_field(OSCILLATOR, 1)
        traj = integrate(fld, [1.0, 0.0], 1.0, StepPolicy(dt=0.1, sample_every=3))
        self.assertEqual(len(traj.times), 5)
        self.assertAlmostEqual(traj.times[-1], 1.0)

    def test_non_separable(self):
        """Mixed Hamiltonians need rk45."""
        fld = compile_field(parse_expr('1/2*p1^2 + q1*p1'), 1)
        with self.assertRaises(NonSeparable):
            integrate(fld, [1.0, 0.0], 1.0)

    def test_singular_approach(self):
        """A run leaving the domain of q1^(2/3) ends singular without raising."""
        fld = compile_field(SINGULAR_DRIFT, 1)
        traj = integrate(fld, [0.5, -1.0], 5.0, StepPolicy(dt=1e-3))
        self.assertIs(traj.status, RunStatus.SINGULAR)
        self.assertIn('q1', traj.message)
        self.assertEqual(traj.rows()[-1][-1], 'singular')

    def test_blowup(self):
        """Escaping orbits end with status blowup."""
        fld = compile_field(parse_expr('1/2*p1^2 - q1^4'), 1)
        traj = integrate(fld, [1.0, 1.0], 10.0, StepPolicy(dt=1e-3))
        self.assertIs(traj.status, RunStatus.BLOWUP)
        self.assertFalse(traj.completed)

    def test_singular_start(self):
        """Starting inside the guard band raises."""
        fld = compile_field(parse_expr('1/2*p1^2 + q1^(-2)'), 1)
        with self.assertRaises(SingularApproach):
            integrate(fld, [0.0, 1.0], 1.0)

    def test_bad_initial_state(self):
        """The state must have 2N components."""
        fld = compile_field(OSCILLATOR, 1)
        with self.assertRaises(ConfigError):
            integrate(fld, [1.0, 0.0, 0.0], 1.0)


class TestRK45(unittest.TestCase):
    """The adaptive integrator."""

    def test_oscillator(self):
        """Samples follow cos t to the tolerance."""
        fld = compile_field(OSCILLATOR, 1)
        policy = StepPolicy(method='rk45', dt=0.1, rtol=1e-10, atol=1e-12)
        traj = integrate(fld, [1.0, 0.0], 10.0, policy)
        self.assertTrue(traj.completed)
        np.testing.assert_allclose(traj.states[:, 0], np.cos(traj.times), atol=1e-8)
        self.assertEqual(len(traj.times), 101)

    def test_mixed_hamiltonian(self):
        """rk45 accepts non-separable Hamiltonians."""
        fld = compile_field(parse_expr('1/2*p1^2 + 1/2*q1^2 + 1/10*q1*p1'), 1)
        traj = integrate(fld, [1.0, 0.0], 5.0, StepPolicy(method='rk45', dt=0.05))
        self.assertLess(traj.max_drift('H'), 1e-8)

    def test_singular_event(self):
        """Guards stop the adaptive run before the end time."""
        fld = compile_field(SINGULAR_DRIFT, 1)
        traj = integrate(fld, [0.5, -1.0], 5.0, StepPolicy(method='rk45', dt=0.01))
        self.assertIn(traj.status, (RunStatus.SINGULAR, RunStatus.BLOWUP))
        self.assertLess(traj.times[-1], 1.0)
        self.assertTrue(np.all(traj.states[:, 0] > 0))


class TestDiagnostics(unittest.TestCase):
    """Drift, reversibility and step-halving checks."""

    def test_relative_drift(self):
        """Drift is scaled by max(1, |F0|)."""
        np.testing.assert_allclose(relative_drift(np.array([0.5, 0.75])), [0.0, 0.25])
        np.testing.assert_allclose(relative_drift(np.array([4.0, 5.0])), [0.0, 0.25])

    def test_reverse_momenta(self):
        """Only the momentum half changes sign."""
        np.testing.assert_array_equal(reverse_momenta(np.array([1.0, 2.0, 3.0, 4.0]), 2), [1, 2, -3, -4])

    def test_drift_trend(self):
        """Verlet energy error oscillates without a secular trend."""
        fld = compile_field(OSCILLATOR, 1)
        traj = integrate(fld, [1.0, 0.0], 100.0, StepPolicy(dt=1e-2, sample_every=10))
        self.assertLess(abs(drift_trend(traj)), 1e-7)

    def test_kdv_integrals(self):
        """Both KdV integrals are conserved at dt = 1e-3."""
        traj = integrate(kdv_field(), KDV_X0, 10.0, StepPolicy(dt=1e-3))
        self.assertTrue(traj.completed)
        self.assertLess(traj.max_drift('H'), 1e-8)
        self.assertLess(traj.max_drift('I'), 1e-8)

    @pytest.mark.slow
    def test_kdv_calibration(self):
        """Long KdV run: drift, second-order convergence and reversibility."""
        fld = kdv_field()
        policy = StepPolicy(dt=1e-3, sample_every=100)
        traj = integrate(fld, KDV_X0, 100.0, policy)
        self.assertLess(traj.max_drift('H'), 1e-8)
        self.assertLess(traj.max_drift('I'), 1e-8)
        ratio = convergence_ratio(fld, KDV_X0, 100.0, policy)
        self.assertGreaterEqual(ratio, 3.5)
        self.assertLessEqual(ratio, 4.5)
        self.assertLess(reversibility_error(fld, KDV_X0, 100.0, policy), 1e-9)

    def test_three_degrees(self):
        """KdV with centrifugal terms in three degrees of freedom keeps H, I and C2."""
        system = build_nd_model(make_kdv('1/2', 0, '1/32', 0), RealizationSpec.with_values(3, [1, Fraction(1, 4)]))
        fld = field_for_system(system)
        x0 = [1.0, 0.5 ** 0.5, 0.05, 0.01, -0.01, 0.02]
        traj = integrate(fld, x0, 50.0, StepPolicy(dt=1e-3, sample_every=50))
        self.assertTrue(traj.completed, traj.message)
        for name in ('H', 'I', 'C2'):
            with self.subTest(quantity=name):
                self.assertLess(traj.max_drift(name), 1e-7)


if __name__ == '__main__':
    unittest.main()
