"""
Unit tests for simulation_oracle module
Input rendering, harmonic energy, RK4 steady states and surface validation
"""

import math
import unittest
from dataclasses import replace
import numpy as np
import sys
import os

# Add parent directory to path for imports
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from errors import PreconditionError, SimulationDivergedError
from lti_systems import TransferFunction, to_state_space
from lure_gain import AnalysisConfig, gain_surface
from nonlinearities import identity, linear, sine
from simulation_oracle import (
    PeriodicInput,
    choose_step,
    extract_steady_state,
    harmonic_energy,
    input_derivative_norm,
    input_harmonic_energy,
    input_rms,
    period_norms,
    render_input,
    sample_input,
    simulate_lure,
    sobolev_sup_bound,
    validate_surface,
)

G = TransferFunction(num=(1,), den=(2, 1))
SS = to_state_space(G)
UNIT_SINE = PeriodicInput(1.0, ((1, 1.0, 0.0),))


class TestPeriodicInput(unittest.TestCase):
    """Input construction and closed forms"""

    def test_even_harmonic_rejected(self):
        with self.assertRaises(PreconditionError):
            PeriodicInput(1.0, ((2, 1.0, 0.0),))

    def test_omega_must_be_positive(self):
        with self.assertRaises(PreconditionError):
            PeriodicInput(0.0, ((1, 1.0, 0.0),))

    def test_period_and_values(self):
        inp = PeriodicInput(2.0, ((1, 1.0, 0.0), (3, 0.5, math.pi / 2)))
        self.assertAlmostEqual(inp.period, math.pi)
        self.assertAlmostEqual(float(inp.evaluate(0.0)), 0.5)
        self.assertAlmostEqual(float(inp.derivative(0.0)), 2.0)

    def test_closed_form_energy(self):
        self.assertAlmostEqual(input_harmonic_energy(UNIT_SINE), math.pi)
        two = PeriodicInput(1.0, ((1, 1.0, 0.0), (3, 1.0, 0.0)))
        self.assertAlmostEqual(input_harmonic_energy(two), 14.05, places=2)
        self.assertAlmostEqual(input_rms(UNIT_SINE), 1 / math.sqrt(2))
        self.assertAlmostEqual(input_derivative_norm(UNIT_SINE), math.sqrt(math.pi))

    def test_as_dict(self):
        self.assertEqual(UNIT_SINE.as_dict(), {'omega': 1.0, 'coefficients': [[1, 1.0, 0.0]]})


class TestRenderingAndNorms(unittest.TestCase):
    """Sampled signals"""

    def test_render_length(self):
        dt = 2 * math.pi / 400
        samples = render_input(UNIT_SINE, dt, 2)
        self.assertEqual(len(samples), 801)
        self.assertAlmostEqual(samples[100], 1.0)

    def test_render_step_too_coarse(self):
        with self.assertRaises(PreconditionError):
            render_input(UNIT_SINE, 2 * math.pi / 100, 1)
        with self.assertRaises(PreconditionError):
            render_input(UNIT_SINE, 0.0, 1)

    def test_harmonic_energy_of_sine(self):
        for amplitude in (0.5, 1.0, 3.0):
            inp = PeriodicInput(1.0, ((1, amplitude, 0.0),))
            dt = 2 * math.pi / 2000
            value = harmonic_energy(render_input(inp, dt, 1), dt, inp.period)
            self.assertAlmostEqual(value / (amplitude ** 2 * math.pi), 1.0, places=4)

    def test_harmonic_energy_two_harmonics(self):
        inp = PeriodicInput(1.0, ((1, 1.0, 0.0), (3, 1.0, 0.0)))
        dt = 2 * math.pi / 4000
        value = harmonic_energy(render_input(inp, dt, 1), dt, inp.period)
        self.assertAlmostEqual(value, input_harmonic_energy(inp), places=3)

    def test_harmonic_energy_wrong_window(self):
        dt = 2 * math.pi / 400
        with self.assertRaises(PreconditionError):
            harmonic_energy(np.zeros(123), dt, 2 * math.pi)

    def test_half_wave_symmetry(self):
        rng = np.random.default_rng(5)
        for omega in (0.3, 1.0, 7.0):
            inp = sample_input(omega, 2.0, rng)
            dt = inp.period / 400
            samples = render_input(inp, dt, 1)
            np.testing.assert_allclose(samples[200:400], -samples[0:200], atol=1e-12)

    def test_harmonic_energy_independent_of_omega(self):
        terms = ((1, 1.0, 0.3), (3, 0.4, -1.0), (5, 0.1, 2.0))
        values = []
        for omega in (0.1, 1.0, 10.0):
            inp = PeriodicInput(omega, terms)
            dt = inp.period / 4000
            values.append(harmonic_energy(render_input(inp, dt, 1), dt, inp.period))
        reference = input_harmonic_energy(PeriodicInput(1.0, terms))
        for value in values:
            self.assertAlmostEqual(value / reference, 1.0, places=3)
        self.assertAlmostEqual(values[0] / values[2], 1.0, places=9)

    def test_sobolev_bound(self):
        rng = np.random.default_rng(3)
        for _ in range(10):
            inp = sample_input(1.0, float(rng.uniform(0.1, 10.0)), rng)
            dt = inp.period / 1000
            window = render_input(inp, dt, 1)[:-1]
            self.assertGreaterEqual(sobolev_sup_bound(window, dt), float(np.max(np.abs(window))))

    def test_period_norms_of_constant(self):
        norm, derivative_norm = period_norms(np.full(100, 2.0), 0.01)
        self.assertAlmostEqual(norm, 2.0)
        self.assertEqual(derivative_norm, 0.0)


class TestSampleInput(unittest.TestCase):

    def test_energy_fill(self):
        rng = np.random.default_rng(0)
        inp = sample_input(2.0, 0.5, rng)
        self.assertAlmostEqual(input_harmonic_energy(inp), 0.99 * 0.5)
        self.assertEqual([k for k, _, _ in inp.coefficients], [1, 3, 5])

    def test_reproducible(self):
        first = sample_input(2.0, 0.5, np.random.default_rng(7))
        second = sample_input(2.0, 0.5, np.random.default_rng(7))
        self.assertEqual(first, second)

    def test_energy_range(self):
        rng = np.random.default_rng(0)
        with self.assertRaises(PreconditionError):
            sample_input(1.0, 0.0, rng)
        with self.assertRaises(PreconditionError):
            sample_input(1.0, math.inf, rng)


class TestSimulation(unittest.TestCase):
    """RK4 loop integration"""

    def test_choose_step(self):
        self.assertAlmostEqual(choose_step(2 * math.pi, SS, 400), 2 * math.pi / 400)
        fast = to_state_space(TransferFunction(num=(1,), den=(1000, 1)))
        n = round(2 * math.pi / choose_step(2 * math.pi, fast, 400))
        self.assertGreaterEqual(n, 2 * math.pi * 1000 / 0.1)

    def test_identity_loop_gain(self):
        dt = choose_step(UNIT_SINE.period, SS, 400)
        sim = simulate_lure(SS, identity(), UNIT_SINE, dt, max_periods=30, steady_tol=1e-8)
        steady = extract_steady_state(sim, UNIT_SINE.period, 1e-7)
        self.assertTrue(steady.converged)
        gain = steady.rms / input_rms(UNIT_SINE)
        self.assertAlmostEqual(gain / abs(1 / (1j + 3)), 1.0, delta=0.01)

    def test_fourth_order_convergence(self):
        def final_output(n):
            sim = simulate_lure(SS, identity(), UNIT_SINE, UNIT_SINE.period / n, max_periods=1)
            return sim.y_samples[-1]

        reference = final_output(12800)
        coarse = abs(final_output(400) - reference)
        fine = abs(final_output(800) - reference)
        self.assertGreater(fine, 0.0)
        self.assertGreater(coarse / fine, 12.0)
        self.assertLess(coarse / fine, 20.0)

    def test_early_stop(self):
        dt = choose_step(UNIT_SINE.period, SS, 400)
        sim = simulate_lure(SS, identity(), UNIT_SINE, dt, max_periods=60, steady_tol=1e-8)
        self.assertLess(sim.periods, 60)
        self.assertEqual(len(sim.times), len(sim.y_samples))

    def test_zero_input(self):
        quiet = PeriodicInput(1.0, ())
        dt = choose_step(quiet.period, SS, 400)
        sim = simulate_lure(SS, sine(), quiet, dt, max_periods=5)
        steady = extract_steady_state(sim, quiet.period)
        self.assertEqual(steady.rms, 0.0)
        self.assertTrue(steady.converged)

    def test_divergence_raises(self):
        dt = choose_step(UNIT_SINE.period, SS, 400)
        with self.assertRaises(SimulationDivergedError):
            simulate_lure(SS, linear(-5.0), UNIT_SINE, dt, max_periods=20)

    def test_divergence_flagged(self):
        dt = choose_step(UNIT_SINE.period, SS, 400)
        sim = simulate_lure(SS, linear(-5.0), UNIT_SINE, dt, max_periods=20, raise_on_divergence=False)
        self.assertTrue(sim.diverged)
        steady = extract_steady_state(sim, UNIT_SINE.period)
        self.assertFalse(steady.converged)
        self.assertTrue(math.isinf(steady.rms))

    def test_too_few_periods(self):
        dt = choose_step(UNIT_SINE.period, SS, 400)
        sim = simulate_lure(SS, sine(), UNIT_SINE, dt, max_periods=2)
        with self.assertRaises(PreconditionError):
            extract_steady_state(sim, UNIT_SINE.period)

    def test_step_must_divide_period(self):
        with self.assertRaises(PreconditionError):
            simulate_lure(SS, sine(), UNIT_SINE, 2 * math.pi / 400.5, max_periods=3)

    def test_biproper_rejected(self):
        biproper = to_state_space(TransferFunction(num=(1, 1), den=(2, 1)))
        with self.assertRaises(PreconditionError):
            simulate_lure(biproper, sine(), UNIT_SINE, 2 * math.pi / 400, max_periods=3)


class TestValidateSurface(unittest.TestCase):
    """Certified surface against simulation"""

    @classmethod
    def setUpClass(cls):
        cls.surface = gain_surface(AnalysisConfig(
            system=G,
            nonlinearity=sine(),
            omega_grid=(0.5, 2.0),
            U_grid=(0.0, 0.01, 1.0),
            k_cap=2001,
            sweep_points=400,
        ))
        cls.options = dict(samples_per_point=2, points=4, seed=0,
                           steps_per_period=400, max_periods=80, steady_tol=1e-7)

    def test_certified_surface_passes(self):
        report = validate_surface(self.surface, **self.options)
        self.assertTrue(report.passed, report.violations)
        self.assertEqual(len(report.points), 4)
        self.assertEqual(report.skipped, 2)
        for point in report.points:
            self.assertLessEqual(point['max_rms_gain'], point['gamma'] * 1.01)

    def test_deterministic(self):
        first = validate_surface(self.surface, **self.options).as_dict()
        second = validate_surface(self.surface, **self.options).as_dict()
        self.assertEqual(first, second)

    def test_halved_bound_is_caught(self):
        halved = tuple(replace(r, gamma=r.gamma / 2) if (r.omega, r.U) == (0.5, 0.01) else r
                       for r in self.surface.records)
        tampered = replace(self.surface, records=halved)
        report = validate_surface(tampered, **self.options)
        self.assertFalse(report.passed)
        checks = {(v['omega'], v['U'], v['check']) for v in report.violations}
        self.assertIn((0.5, 0.01, 'rms_gain'), checks)


if __name__ == '__main__':
    unittest.main()
