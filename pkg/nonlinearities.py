"""
Static nonlinearities for Lur'e loops
Amplitude-dependent slope and sector bounds a(A), b(A), c(A), d(A) and their asymptotes
"""

import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize_scalar

from config import Config
from errors import MissingBoundsError, PreconditionError
from utils.logger import logger

Interval = Tuple[float, float]
BoundFunction = Callable[[float], Interval]


class NonlinearityKind(str, Enum):
    SINE = 'sine'
    SATURATION = 'saturation'
    DEADZONE = 'deadzone'
    CUSTOM = 'custom'


@dataclass(frozen=True)
class Nonlinearity:
    """
    Static map phi: R -> R with phi(0) = 0.

    Built-in kinds carry their parameter (limit or width); custom kinds carry
    the evaluation function and user-supplied slope/sector bound functions.
    Bound functions receive the amplitude A (math.inf for the asymptotes).
    A custom kind whose bounds jump lists those amplitudes in breakpoints.
    """
    kind: NonlinearityKind
    limit: Optional[float] = None
    width: Optional[float] = None
    func: Optional[Callable] = None
    slope: Optional[BoundFunction] = None
    sector: Optional[BoundFunction] = None
    odd: bool = True
    name: str = ''
    breakpoints: Tuple[float, ...] = ()

    @property
    def label(self) -> str:
        if self.name:
            return self.name
        if self.kind == NonlinearityKind.SATURATION:
            return f"saturation(L={self.limit:g})"
        if self.kind == NonlinearityKind.DEADZONE:
            return f"deadzone(w={self.width:g})"
        return self.kind.value


@dataclass(frozen=True)
class NonlinearityBounds:
    """Bound functions of one nonlinearity together with their A -> inf limits"""
    a: Callable[[float], float]
    b: Callable[[float], float]
    c: Callable[[float], float]
    d: Callable[[float], float]
    a_star: float
    b_star: float
    c_star: float
    d_star: float
    odd: bool

    def slope_interval(self, amplitude: float) -> Interval:
        return (self.a(amplitude), self.b(amplitude))

    def sector_interval(self, amplitude: float) -> Interval:
        return (self.c(amplitude), self.d(amplitude))


def sine() -> Nonlinearity:
    return Nonlinearity(kind=NonlinearityKind.SINE)


def saturation(limit: float = 1.0) -> Nonlinearity:
    if not limit > 0:
        raise PreconditionError(f"saturation limit must be positive, got {limit}")
    return Nonlinearity(kind=NonlinearityKind.SATURATION, limit=float(limit))


def deadzone(width: float) -> Nonlinearity:
    if not width >= 0:
        raise PreconditionError(f"deadzone width must be non-negative, got {width}")
    return Nonlinearity(kind=NonlinearityKind.DEADZONE, width=float(width))


def custom(func: Callable, slope: BoundFunction = None, sector: BoundFunction = None,
           odd: bool = True, name: str = 'custom',
           breakpoints: Sequence[float] = ()) -> Nonlinearity:
    """User nonlinearity; bounds are trusted unless checked with verify_bounds"""
    points = tuple(sorted(float(b) for b in breakpoints))
    if any(not (0 < b < math.inf) for b in points):
        raise PreconditionError(f"breakpoints must be positive and finite, got {points}")
    return Nonlinearity(kind=NonlinearityKind.CUSTOM, func=func, slope=slope,
                        sector=sector, odd=odd, name=name, breakpoints=points)


def _linear_map(gain: float):
    def apply(x):
        return gain * x
    return apply


def linear(gain: float) -> Nonlinearity:
    """phi(x) = gain * x with exact (constant) bounds"""
    gain = float(gain)
    interval = (gain, gain)
    return custom(_linear_map(gain), slope=lambda A: interval, sector=lambda A: interval,
                  odd=True, name='identity' if gain == 1.0 else f"linear(k={gain:g})")


def identity() -> Nonlinearity:
    return linear(1.0)


@lru_cache(maxsize=1)
def sine_critical_amplitude() -> float:
    """A* = argmin of sin(A)/A on [pi, 2pi] (the global minimiser on A > 0)"""
    result = minimize_scalar(lambda A: math.sin(A) / A, bounds=(math.pi, 2.0 * math.pi),
                             method='bounded', options={'xatol': 1e-12})
    logger.debug("Sine critical amplitude", A_star=float(result.x), c_star=float(result.fun))
    return float(result.x)


def sine_sector_floor() -> float:
    """c* = sin(A*)/A*"""
    A_star = sine_critical_amplitude()
    return math.sin(A_star) / A_star


def amplitude_breakpoints(nl: Nonlinearity) -> Tuple[float, ...]:
    """
    Amplitudes at which slope or sector bounds jump.

    Bounds at a breakpoint belong to the piece below it. Between breakpoints
    the bounds move continuously with A.
    """
    if nl.kind == NonlinearityKind.SATURATION:
        return (nl.limit,)
    if nl.kind == NonlinearityKind.DEADZONE:
        return (nl.width,) if nl.width > 0 else ()
    return nl.breakpoints


def eval_nl(nl: Nonlinearity, x):
    """phi(x) for a scalar or a numpy array"""
    if nl.kind == NonlinearityKind.SINE:
        y = np.sin(x)
    elif nl.kind == NonlinearityKind.SATURATION:
        y = np.clip(x, -nl.limit, nl.limit)
    elif nl.kind == NonlinearityKind.DEADZONE:
        y = np.sign(x) * np.maximum(np.abs(x) - nl.width, 0.0)
    else:
        y = nl.func(x)
    if np.ndim(y) == 0:
        return float(y)
    return np.asarray(y, dtype=float)


def _check_amplitude(amplitude: float):
    if math.isnan(amplitude) or amplitude < 0:
        raise PreconditionError(f"amplitude must be >= 0 (or math.inf), got {amplitude}")


def slope_bounds(nl: Nonlinearity, amplitude: float) -> Interval:
    """Tight slope interval [a(A), b(A)] of phi on |x|, |y| <= A"""
    _check_amplitude(amplitude)

    if nl.kind == NonlinearityKind.SINE:
        if amplitude <= math.pi:
            return (math.cos(amplitude), 1.0)
        return (-1.0, 1.0)

    if nl.kind == NonlinearityKind.SATURATION:
        return (1.0, 1.0) if amplitude <= nl.limit else (0.0, 1.0)

    if nl.kind == NonlinearityKind.DEADZONE:
        if nl.width == 0:
            return (1.0, 1.0)
        return (0.0, 0.0) if amplitude <= nl.width else (0.0, 1.0)

    if nl.slope is None:
        raise MissingBoundsError(f"{nl.label} has no slope bound function")
    a, b = nl.slope(amplitude)
    return (float(a), float(b))


def sector_bounds(nl: Nonlinearity, amplitude: float) -> Interval:
    """Tight sector interval [c(A), d(A)] of phi(x)/x on 0 < |x| <= A"""
    _check_amplitude(amplitude)

    if nl.kind == NonlinearityKind.SINE:
        if amplitude == 0.0:
            return (1.0, 1.0)
        if amplitude <= sine_critical_amplitude():
            return (math.sin(amplitude) / amplitude, 1.0)
        return (sine_sector_floor(), 1.0)

    if nl.kind == NonlinearityKind.SATURATION:
        if amplitude <= nl.limit:
            return (1.0, 1.0)
        return (nl.limit / amplitude, 1.0)

    if nl.kind == NonlinearityKind.DEADZONE:
        if nl.width == 0:
            return (1.0, 1.0)
        if amplitude <= nl.width:
            return (0.0, 0.0)
        return (0.0, 1.0 - nl.width / amplitude)

    if nl.sector is None:
        raise MissingBoundsError(f"{nl.label} has no sector bound function")
    c, d = nl.sector(amplitude)
    return (float(c), float(d))


def asymptotic_bounds(nl: Nonlinearity) -> Tuple[float, float, float, float]:
    """(a*, b*, c*, d*)"""
    a, b = slope_bounds(nl, math.inf)
    c, d = sector_bounds(nl, math.inf)
    return (a, b, c, d)


def nonlinearity_bounds(nl: Nonlinearity) -> NonlinearityBounds:
    a_star, b_star, c_star, d_star = asymptotic_bounds(nl)
    return NonlinearityBounds(
        a=lambda A: slope_bounds(nl, A)[0],
        b=lambda A: slope_bounds(nl, A)[1],
        c=lambda A: sector_bounds(nl, A)[0],
        d=lambda A: sector_bounds(nl, A)[1],
        a_star=a_star, b_star=b_star, c_star=c_star, d_star=d_star,
        odd=nl.odd,
    )


def sector_gain(nl: Nonlinearity, amplitude: float) -> float:
    """L2 gain of phi restricted to amplitude A: max(|c(A)|, |d(A)|)"""
    c, d = sector_bounds(nl, amplitude)
    return max(abs(c), abs(d))


def verify_bounds(nl: Nonlinearity, amplitudes: Sequence[float], n_samples: int = 10000,
                  seed: int = 0, tol: float = Config.GEOMETRY_TOL) -> List[Dict]:
    """
    Sample difference quotients and ratios of phi against its stated bounds.

    Returns one entry per amplitude and bound kind whose sampled extreme leaves
    the stated interval by more than tol. Also reports oddness failures for
    nonlinearities flagged odd. An empty list means no counterexample was found.
    """
    rng = np.random.default_rng(seed)
    violations: List[Dict] = []

    for amplitude in amplitudes:
        if not math.isfinite(amplitude) or amplitude <= 0:
            continue
        x = rng.uniform(-amplitude, amplitude, n_samples)
        y = rng.uniform(-amplitude, amplitude, n_samples)
        fx = eval_nl(nl, x)
        fy = eval_nl(nl, y)

        apart = np.abs(x - y) > 1e-9 * amplitude
        slopes = (fx[apart] - fy[apart]) / (x[apart] - y[apart])
        nonzero = np.abs(x) > 1e-9 * amplitude
        ratios = fx[nonzero] / x[nonzero]

        for kind, values, (lo, hi) in (('slope', slopes, slope_bounds(nl, amplitude)),
                                       ('sector', ratios, sector_bounds(nl, amplitude))):
            if values.size == 0:
                continue
            if values.min() < lo - tol or values.max() > hi + tol:
                violations.append({
                    'amplitude': float(amplitude),
                    'kind': kind,
                    'observed': [float(values.min()), float(values.max())],
                    'bound': [lo, hi],
                })

        if nl.odd:
            asymmetry = float(np.max(np.abs(eval_nl(nl, -x) + fx)))
            if asymmetry > tol:
                violations.append({'amplitude': float(amplitude), 'kind': 'oddness',
                                   'observed': [asymmetry], 'bound': [0.0, 0.0]})

    for entry in violations:
        logger.warning("Nonlinearity bound violated by sampling", nonlinearity=nl.label, **entry)
    return violations
