"""
Rational SISO LTI systems
Frequency response, stability diagnostics, odd-harmonic sampling and realizations
"""

import math
from dataclasses import dataclass, field
from typing import Iterator, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial import polynomial as P

from config import Config
from errors import PoleOnAxisError, PreconditionError
from utils.logger import logger


def _trim(coefficients: Sequence[float]) -> Tuple[float, ...]:
    """Drop trailing (highest power) zeros; ascending storage"""
    values = [float(c) for c in coefficients]
    while values and values[-1] == 0.0:
        values.pop()
    return tuple(values)


@dataclass(frozen=True)
class TransferFunction:
    """
    G(s) = num(s) / den(s) with real coefficients in ascending powers of s.

    G(s) = 1/(s+2) is TransferFunction(num=(1,), den=(2, 1)).
    """
    num: Tuple[float, ...]
    den: Tuple[float, ...]

    def __post_init__(self):
        num = _trim(self.num)
        den = _trim(self.den)
        if not den:
            raise PreconditionError("denominator must have a nonzero coefficient")
        if not all(math.isfinite(c) for c in num + den):
            raise PreconditionError("coefficients must be finite")
        object.__setattr__(self, 'num', num if num else (0.0,))
        object.__setattr__(self, 'den', den)

    @property
    def num_degree(self) -> int:
        return len(_trim(self.num)) - 1

    @property
    def den_degree(self) -> int:
        return len(self.den) - 1

    @property
    def is_proper(self) -> bool:
        return self.num_degree <= self.den_degree

    @property
    def is_strictly_proper(self) -> bool:
        return self.num_degree < self.den_degree

    def poles(self) -> np.ndarray:
        """Denominator roots (companion matrix eigenvalues)"""
        if self.den_degree == 0:
            return np.array([], dtype=complex)
        return P.polyroots(self.den)

    def __repr__(self):
        return f"TransferFunction(num={list(self.num)}, den={list(self.den)})"


@dataclass(frozen=True)
class StateSpace:
    """x' = A x + B e, y = C x + D e"""
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: float

    def __post_init__(self):
        n = self.A.shape[0]
        if self.A.shape != (n, n) or self.B.shape != (n, 1) or self.C.shape != (1, n):
            raise PreconditionError(
                f"inconsistent realization shapes A{self.A.shape} B{self.B.shape} C{self.C.shape}")

    @property
    def order(self) -> int:
        return self.A.shape[0]


@dataclass(frozen=True)
class StabilityDiagnostic:
    """Outcome of check_stability"""
    stable: bool
    proper: bool
    strictly_proper: bool
    poles: Tuple[complex, ...] = field(default=())

    def as_dict(self) -> dict:
        return {
            'stable': self.stable,
            'proper': self.proper,
            'strictly_proper': self.strictly_proper,
            'poles': [[p.real, p.imag] for p in self.poles],
        }


@dataclass(frozen=True)
class HarmonicSamples:
    """G(jkw) for odd k, optionally followed by the high-frequency limit point"""
    omega: float
    harmonics: Tuple[int, ...]
    values: Tuple[complex, ...]
    includes_limit: bool
    truncated: bool

    def __iter__(self) -> Iterator[complex]:
        return iter(self.values)

    def __len__(self) -> int:
        return len(self.values)

    def __getitem__(self, index):
        return self.values[index]


def eval_freq(tf: TransferFunction, omega: float) -> complex:
    """Evaluate G(j*omega)"""
    s = 1j * omega
    den = P.polyval(s, tf.den)
    if den == 0:
        raise PoleOnAxisError(omega)
    return complex(P.polyval(s, tf.num) / den)


def frequency_response(tf: TransferFunction, omegas) -> np.ndarray:
    """Vectorised eval_freq over an array of frequencies"""
    s = 1j * np.asarray(omegas, dtype=float)
    den = P.polyval(s, tf.den)
    if np.any(den == 0):
        raise PoleOnAxisError(float(np.asarray(omegas)[np.argmax(den == 0)]))
    return P.polyval(s, tf.num) / den


def high_frequency_limit(tf: TransferFunction) -> complex:
    """G(j*inf): zero when strictly proper, else the leading coefficient ratio"""
    if not tf.is_proper:
        raise PreconditionError("improper transfer functions have no finite high-frequency limit")
    if tf.is_strictly_proper:
        return 0j
    return complex(tf.num[-1] / tf.den[-1])


def check_stability(tf: TransferFunction, margin: float = Config.STABILITY_MARGIN) -> StabilityDiagnostic:
    """Pole locations and properness flags; poles with Re(p) > -margin count as unstable"""
    poles = tf.poles()
    stable = bool(np.all(poles.real < -margin))
    return StabilityDiagnostic(
        stable=stable,
        proper=tf.is_proper,
        strictly_proper=tf.is_strictly_proper,
        poles=tuple(complex(p) for p in poles),
    )


def pole_magnitude_center(tf: TransferFunction) -> float:
    """Geometric mean of the pole magnitudes (1.0 for a static gain)"""
    magnitudes = np.abs(tf.poles())
    magnitudes = magnitudes[magnitudes > 0]
    if magnitudes.size == 0:
        return 1.0
    return float(np.exp(np.mean(np.log(magnitudes))))


def default_tail_tol(tf: TransferFunction, omega: float,
                     rel_tol: float = Config.TAIL_REL_TOL) -> float:
    """rel_tol times the largest |G(jkw)| over the first few odd harmonics"""
    reference = frequency_response(
        tf, omega * np.arange(1, Config.TAIL_REFERENCE_HARMONIC + 1, 2))
    return rel_tol * float(np.max(np.abs(reference)))


def odd_harmonic_samples(tf: TransferFunction, omega: float,
                         tail_tol: Optional[float] = None,
                         k_cap: int = Config.K_CAP) -> HarmonicSamples:
    """
    Sample the Nyquist diagram at the odd harmonics k*omega, k = 1, 3, 5, ...

    Sampling stops at the first harmonic whose magnitude drops below tail_tol
    (k = 1 is always kept) or once k exceeds k_cap. The high-frequency limit
    point G(j*inf) is appended so the hull of the samples contains the closure
    of the harmonic set.
    """
    if not omega > 0:
        raise PreconditionError(f"omega must be positive, got {omega}")
    if not tf.is_proper:
        raise PreconditionError("odd-harmonic sampling needs a proper transfer function")

    if tail_tol is None:
        tail_tol = default_tail_tol(tf, omega)
    if not tail_tol > 0:
        raise PreconditionError(f"tail_tol must be positive, got {tail_tol}")

    ks = np.arange(1, k_cap + 1, 2)
    values = frequency_response(tf, omega * ks)
    below = np.nonzero(np.abs(values[1:]) < tail_tol)[0]
    if below.size:
        count = int(below[0]) + 1
        truncated = False
    else:
        count = ks.size
        truncated = True

    kept = [complex(v) for v in values[:count]]
    limit = high_frequency_limit(tf)
    kept.append(limit)

    if truncated and not tf.is_strictly_proper:
        logger.warning("Harmonic sampling hit k_cap before reaching tail tolerance",
                       omega=omega, k_cap=k_cap, tail_tol=tail_tol)

    return HarmonicSamples(
        omega=float(omega),
        harmonics=tuple(int(k) for k in ks[:count]),
        values=tuple(kept),
        includes_limit=True,
        truncated=truncated and not tf.is_strictly_proper,
    )


def to_state_space(tf: TransferFunction) -> StateSpace:
    """Controllable canonical realization"""
    if not tf.is_proper:
        raise PreconditionError("cannot realize an improper transfer function")

    # descending, monic denominator
    lead = tf.den[-1]
    a = np.array(tf.den[::-1]) / lead
    b = np.array(tf.num[::-1]) / lead
    n = len(a) - 1
    if len(b) < len(a):
        b = np.pad(b, (len(a) - len(b), 0), 'constant')

    if n == 0:
        return StateSpace(A=np.zeros((0, 0)), B=np.zeros((0, 1)), C=np.zeros((1, 0)), D=float(b[0]))

    A = np.zeros((n, n))
    for i in range(n - 1):
        A[i, i + 1] = 1.0
    A[n - 1, :] = -a[1:][::-1]

    B = np.zeros((n, 1))
    B[n - 1, 0] = 1.0

    C = (b[1:][::-1] - b[0] * a[1:][::-1]).reshape(1, n)
    D = float(b[0])

    return StateSpace(A=A, B=B, C=C, D=D)


def state_space_response(ss: StateSpace, omega: float) -> complex:
    """C (jwI - A)^-1 B + D"""
    if ss.order == 0:
        return complex(ss.D)
    resolvent = np.linalg.solve(1j * omega * np.eye(ss.order) - ss.A, ss.B)
    return complex((ss.C @ resolvent)[0, 0] + ss.D)


def linearized_loop(tf: TransferFunction, slope: float) -> TransferFunction:
    """Closed loop G / (1 + slope*G) = num / (den + slope*num)"""
    num = np.array(tf.num)
    den = P.polyadd(tf.den, slope * num)
    if np.all(np.abs(den) <= Config.GEOMETRY_TOL * max(1.0, np.max(np.abs(tf.den)))):
        raise PreconditionError(f"closed-loop denominator cancels identically for slope {slope:g}")
    # coefficients that cancel to rounding level are exact zeros
    den = np.where(np.abs(den) <= 1e-14 * np.max(np.abs(den)), 0.0, den)
    return TransferFunction(num=tuple(num), den=tuple(den))
