"""
Unit tests for nonlinearities module
Slope and sector bound formulas, asymptotes and the sampling check
"""

import math
import unittest
import numpy as np
import sys
import os

# Add parent directory to path for imports
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from errors import MissingBoundsError, PreconditionError
from nonlinearities import (
    NonlinearityKind,
    amplitude_breakpoints,
    asymptotic_bounds,
    custom,
    deadzone,
    eval_nl,
    identity,
    linear,
    nonlinearity_bounds,
    saturation,
    sector_bounds,
    sector_gain,
    sine,
    sine_critical_amplitude,
    sine_sector_floor,
    slope_bounds,
    verify_bounds,
)


class TestSine(unittest.TestCase):
    """phi = sin"""

    def test_critical_amplitude(self):
        A_star = sine_critical_amplitude()
        self.assertAlmostEqual(A_star, 4.4934, places=4)
        # stationary point of sin(A)/A: tan(A) = A
        self.assertAlmostEqual(math.tan(A_star), A_star, places=4)
        self.assertAlmostEqual(sine_sector_floor(), -0.21723, places=5)

    def test_slope_bounds(self):
        self.assertEqual(slope_bounds(sine(), 0.0), (1.0, 1.0))
        lo, hi = slope_bounds(sine(), math.pi / 2)
        self.assertAlmostEqual(lo, 0.0, places=12)
        self.assertEqual(hi, 1.0)
        self.assertEqual(slope_bounds(sine(), 4.0), (-1.0, 1.0))
        self.assertEqual(slope_bounds(sine(), math.inf), (-1.0, 1.0))

    def test_sector_bounds(self):
        self.assertEqual(sector_bounds(sine(), 0.0), (1.0, 1.0))
        lo, hi = sector_bounds(sine(), math.pi)
        self.assertAlmostEqual(lo, 0.0, places=12)
        self.assertEqual(hi, 1.0)
        self.assertEqual(sector_bounds(sine(), 10.0), (sine_sector_floor(), 1.0))

    def test_asymptotes(self):
        a, b, c, d = asymptotic_bounds(sine())
        self.assertEqual((a, b, d), (-1.0, 1.0, 1.0))
        self.assertAlmostEqual(c, -0.21723, places=5)

    def test_sector_continuous_at_critical_amplitude(self):
        A_star = sine_critical_amplitude()
        below, _ = sector_bounds(sine(), A_star * (1 - 1e-9))
        self.assertAlmostEqual(below, sine_sector_floor(), places=8)

    def test_piecewise_formulas_on_dense_grid(self):
        A_star = sine_critical_amplitude()
        for A in np.linspace(0.0, 20.0, 4001):
            a, b = slope_bounds(sine(), A)
            c, d = sector_bounds(sine(), A)
            expected_a = math.cos(A) if A <= math.pi else -1.0
            if A == 0.0:
                expected_c = 1.0
            elif A <= A_star:
                expected_c = math.sin(A) / A
            else:
                expected_c = math.sin(A_star) / A_star
            self.assertAlmostEqual(a, expected_a, delta=1e-9, msg=A)
            self.assertAlmostEqual(c, expected_c, delta=1e-9, msg=A)
            self.assertEqual((b, d), (1.0, 1.0))

    def test_sector_floor_matches_sampled_minimum(self):
        for A in (0.5, 2.0, 4.0, 4.4, 6.0, 12.0):
            x = np.linspace(1e-6, A, 200001)
            c, _ = sector_bounds(sine(), A)
            self.assertAlmostEqual(c, float(np.min(np.sin(x) / x)), delta=1e-6, msg=A)


class TestSaturationAndDeadzone(unittest.TestCase):
    """Piecewise-linear kinds"""

    def test_saturation_linear_region(self):
        nl = saturation(1.0)
        self.assertEqual(slope_bounds(nl, 0.5), (1.0, 1.0))
        self.assertEqual(sector_bounds(nl, 0.5), (1.0, 1.0))

    def test_saturation_clipped_region(self):
        nl = saturation(1.0)
        self.assertEqual(slope_bounds(nl, 2.0), (0.0, 1.0))
        self.assertEqual(sector_bounds(nl, 2.0), (0.5, 1.0))
        self.assertEqual(asymptotic_bounds(nl), (0.0, 1.0, 0.0, 1.0))

    def test_deadzone(self):
        nl = deadzone(0.5)
        self.assertEqual(slope_bounds(nl, 0.25), (0.0, 0.0))
        self.assertEqual(sector_bounds(nl, 0.25), (0.0, 0.0))
        self.assertEqual(slope_bounds(nl, 1.0), (0.0, 1.0))
        self.assertEqual(sector_bounds(nl, 1.0), (0.0, 0.5))
        self.assertEqual(asymptotic_bounds(nl), (0.0, 1.0, 0.0, 1.0))

    def test_zero_width_deadzone_is_identity(self):
        nl = deadzone(0.0)
        for A in (0.0, 0.5, 3.0, math.inf):
            self.assertEqual(slope_bounds(nl, A), (1.0, 1.0))
            self.assertEqual(sector_bounds(nl, A), (1.0, 1.0))
        self.assertEqual(verify_bounds(nl, [0.5, 3.0], n_samples=2000), [])

    def test_invalid_parameters(self):
        with self.assertRaises(PreconditionError):
            saturation(0.0)
        with self.assertRaises(PreconditionError):
            deadzone(-1.0)

    def test_labels(self):
        self.assertEqual(saturation(2.0).label, 'saturation(L=2)')
        self.assertEqual(deadzone(0.5).label, 'deadzone(w=0.5)')
        self.assertEqual(sine().label, 'sine')


class TestCustom(unittest.TestCase):
    """User nonlinearities"""

    def test_identity(self):
        nl = identity()
        self.assertEqual(nl.kind, NonlinearityKind.CUSTOM)
        self.assertEqual(nl.label, 'identity')
        self.assertEqual(asymptotic_bounds(nl), (1.0, 1.0, 1.0, 1.0))

    def test_linear_gain(self):
        nl = linear(0.5)
        self.assertEqual(slope_bounds(nl, 3.0), (0.5, 0.5))
        self.assertEqual(eval_nl(nl, 4.0), 2.0)

    def test_missing_bounds(self):
        nl = custom(np.tanh)
        with self.assertRaises(MissingBoundsError):
            slope_bounds(nl, 1.0)
        with self.assertRaises(MissingBoundsError):
            sector_bounds(nl, 1.0)

    def test_negative_amplitude(self):
        with self.assertRaises(PreconditionError):
            slope_bounds(sine(), -1.0)
        with self.assertRaises(PreconditionError):
            sector_bounds(sine(), math.nan)


class TestBreakpoints(unittest.TestCase):
    """Amplitudes where the bounds jump"""

    def test_built_in(self):
        self.assertEqual(amplitude_breakpoints(saturation(2.0)), (2.0,))
        self.assertEqual(amplitude_breakpoints(deadzone(0.5)), (0.5,))
        self.assertEqual(amplitude_breakpoints(deadzone(0.0)), ())
        self.assertEqual(amplitude_breakpoints(sine()), ())
        self.assertEqual(amplitude_breakpoints(identity()), ())

    def test_custom_sorted(self):
        nl = custom(np.tanh, slope=lambda A: (0.0, 1.0), sector=lambda A: (0.0, 1.0),
                    breakpoints=[3, 1])
        self.assertEqual(amplitude_breakpoints(nl), (1.0, 3.0))

    def test_custom_invalid(self):
        with self.assertRaises(PreconditionError):
            custom(np.tanh, breakpoints=[0.0])
        with self.assertRaises(PreconditionError):
            custom(np.tanh, breakpoints=[math.inf])

    def test_saturation_bounds_jump_only_there(self):
        nl = saturation(1.0)
        self.assertEqual(slope_bounds(nl, 1.0), (1.0, 1.0))
        self.assertEqual(slope_bounds(nl, 1.0 + 1e-12), (0.0, 1.0))


class TestEvaluation(unittest.TestCase):

    def test_scalar_returns_float(self):
        self.assertIsInstance(eval_nl(sine(), 0.5), float)
        self.assertAlmostEqual(eval_nl(saturation(1.0), 3.0), 1.0)

    def test_vector(self):
        values = eval_nl(deadzone(0.5), np.array([-1.0, 0.2, 2.0]))
        np.testing.assert_allclose(values, [-0.5, 0.0, 1.5])

    def test_sector_gain(self):
        self.assertEqual(sector_gain(sine(), math.inf), 1.0)
        self.assertEqual(sector_gain(saturation(1.0), 2.0), 1.0)
        self.assertEqual(sector_gain(deadzone(0.5), 1.0), 0.5)


class TestBoundProperties(unittest.TestCase):
    """Nesting and sampled tightness"""

    def test_intervals_nested_in_amplitude(self):
        amplitudes = [0.0, 0.1, 0.5, 1.0, 2.0, 3.0, 4.0, 4.5, 6.0, 20.0, math.inf]
        for nl in (sine(), saturation(1.0), deadzone(0.5)):
            for bound in (slope_bounds, sector_bounds):
                previous = bound(nl, amplitudes[0])
                for A in amplitudes[1:]:
                    current = bound(nl, A)
                    self.assertLessEqual(current[0], previous[0] + 1e-15, (nl.label, A))
                    self.assertGreaterEqual(current[1], previous[1] - 1e-15, (nl.label, A))
                    previous = current

    def test_bounds_object(self):
        bounds = nonlinearity_bounds(sine())
        self.assertEqual(bounds.c_star, sine_sector_floor())
        self.assertEqual(bounds.slope_interval(0.0), (1.0, 1.0))
        self.assertEqual(bounds.sector_interval(math.inf), (bounds.c_star, bounds.d_star))
        self.assertTrue(bounds.odd)

    def test_built_in_bounds_hold_under_sampling(self):
        amplitudes = [0.5, 1.0, 2.0, 4.0, 4.5, 10.0]
        for nl in (sine(), saturation(1.0), deadzone(0.5), identity()):
            self.assertEqual(verify_bounds(nl, amplitudes, n_samples=5000, seed=1), [], nl.label)

    def test_wrong_bounds_detected(self):
        nl = custom(np.tanh, slope=lambda A: (1.0, 1.0), sector=lambda A: (1.0, 1.0), name='tanh')
        kinds = {entry['kind'] for entry in verify_bounds(nl, [2.0], n_samples=2000)}
        self.assertEqual(kinds, {'slope', 'sector'})

    def test_oddness_detected(self):
        nl = custom(lambda x: x ** 2, slope=lambda A: (-2 * A, 2 * A), sector=lambda A: (-A, A),
                    odd=True, name='square')
        violations = verify_bounds(nl, [1.0], n_samples=2000)
        self.assertEqual([entry['kind'] for entry in violations], ['oddness'])

    def test_infinite_amplitudes_skipped(self):
        self.assertEqual(verify_bounds(sine(), [0.0, math.inf]), [])


if __name__ == '__main__':
    unittest.main()
