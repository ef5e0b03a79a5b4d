"""
Gain certification engine for Lur'e systems
Well-posedness margins, frequency-dependent margins, amplitude bisection and (omega, U) gain surfaces
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from typing import Callable, Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from config import Config
from errors import CertificationError, HypothesisError, MissingBoundsError, PreconditionError
from lti_systems import (
    TransferFunction,
    check_stability,
    default_tail_tol,
    eval_freq,
    frequency_response,
    high_frequency_limit,
    odd_harmonic_samples,
    pole_magnitude_center,
)
from nonlinearities import (
    Interval,
    Nonlinearity,
    NonlinearityBounds,
    amplitude_breakpoints,
    asymptotic_bounds,
    nonlinearity_bounds,
    sector_bounds,
    slope_bounds,
)
from region_geometry import (
    HyperbolicRegion,
    disk_from_interval,
    dist_region_disk,
    hco,
    invert_region,
    scaled_negated_disk,
)
from utils.logger import log_function_call, logger

SURFACE_COLUMNS = ['omega', 'U', 'r_omega_A', 'r_partial_omega_A', 'A_bound', 'gamma', 'feasible']


def _strictly_increasing(values: Sequence[float]) -> bool:
    return all(b > a for a, b in zip(values, values[1:]))


@dataclass(frozen=True)
class AnalysisConfig:
    """Everything gain_surface needs: the loop, the grids and the numeric knobs"""
    system: TransferFunction
    nonlinearity: Nonlinearity
    omega_grid: Tuple[float, ...]
    U_grid: Tuple[float, ...]
    tau_steps: int = Config.TAU_STEPS
    bisection_tol: float = Config.BISECTION_TOL
    max_bisection_iters: int = Config.MAX_BISECTION_ITERS
    tail_rel_tol: float = Config.TAIL_REL_TOL
    k_cap: int = Config.K_CAP
    geometry_tol: float = Config.GEOMETRY_TOL
    sweep_points: int = Config.SWEEP_POINTS
    sweep_decades: float = Config.SWEEP_DECADES
    workers: int = Config.WORKERS

    def __post_init__(self):
        object.__setattr__(self, 'omega_grid', tuple(float(w) for w in self.omega_grid))
        object.__setattr__(self, 'U_grid', tuple(float(u) for u in self.U_grid))

        if not self.omega_grid or not self.U_grid:
            raise PreconditionError("omega and U grids must be non-empty")
        if not _strictly_increasing(self.omega_grid):
            raise PreconditionError("omega grid must be strictly increasing")
        if not _strictly_increasing(self.U_grid):
            raise PreconditionError("U grid must be strictly increasing")
        if self.omega_grid[0] <= 0 or not math.isfinite(self.omega_grid[-1]):
            raise PreconditionError("omega grid values must be positive and finite")
        if self.U_grid[0] < 0:
            raise PreconditionError("U grid values must be non-negative")
        if self.tau_steps < 2:
            raise PreconditionError(f"tau_steps must be at least 2, got {self.tau_steps}")
        if not self.bisection_tol > 0:
            raise PreconditionError(f"bisection_tol must be positive, got {self.bisection_tol}")
        if self.workers < 1:
            raise PreconditionError(f"workers must be at least 1, got {self.workers}")

    @property
    def harmonic_options(self) -> Dict:
        return {'tail_rel_tol': self.tail_rel_tol, 'k_cap': self.k_cap, 'tol': self.geometry_tol}

    @property
    def sweep_options(self) -> Dict:
        return {'sweep_points': self.sweep_points, 'sweep_decades': self.sweep_decades,
                'tol': self.geometry_tol}


@dataclass(frozen=True)
class GainRecord:
    """Certified quantities at one (omega, U) point"""
    omega: float
    U: float
    r_omega_A: float
    r_partial_omega_A: float
    A_bound: float
    gamma: float
    r_omega_inf: float
    bisection_iters: int
    feasible: bool

    def as_dict(self) -> Dict:
        return asdict(self)


@dataclass(frozen=True)
class GainSurface:
    """Records in grid order (omega outer, U inner) plus the global quantities"""
    config: AnalysisConfig
    records: Tuple[GainRecord, ...]
    wellposedness_margin: float
    tau_argmin: float
    gamma_inf: Tuple[float, ...]
    global_gain: float
    hypotheses: Dict[str, bool] = field(default_factory=dict)

    def __post_init__(self):
        expected = len(self.config.omega_grid) * len(self.config.U_grid)
        if len(self.records) != expected:
            raise PreconditionError(f"surface holds {len(self.records)} records, grid needs {expected}")

    @property
    def shape(self) -> Tuple[int, int]:
        return (len(self.config.omega_grid), len(self.config.U_grid))

    def record(self, omega_index: int, U_index: int) -> GainRecord:
        return self.records[omega_index * len(self.config.U_grid) + U_index]

    def column(self, omega_index: int) -> List[GainRecord]:
        """Records of one frequency, ordered by U"""
        n = len(self.config.U_grid)
        return list(self.records[omega_index * n:(omega_index + 1) * n])

    def grid(self, name: str) -> np.ndarray:
        """One record field as an (n_omega, n_U) array"""
        return np.array([getattr(r, name) for r in self.records], dtype=float).reshape(self.shape)

    def as_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame([r.as_dict() for r in self.records])
        return frame[SURFACE_COLUMNS]


class AmplitudeBound(NamedTuple):
    A_bound: float
    iters: int
    feasible: bool


def _margin(region: HyperbolicRegion, interval: Interval) -> float:
    """dist(region, -D_[lo, hi])"""
    lo, hi = interval
    if lo > hi:
        raise PreconditionError(f"interval lower end {lo} exceeds upper end {hi}")
    return dist_region_disk(region, disk_from_interval(-hi, -lo))


def check_hypotheses(G: TransferFunction, nl: Nonlinearity) -> Dict[str, bool]:
    """Structural hypotheses of the certificate; raises on the first failure"""
    diagnostic = check_stability(G)
    if not diagnostic.stable:
        raise HypothesisError('stability', f"G has poles with non-negative real part: "
                                           f"{[complex(round(p.real, 6), round(p.imag, 6)) for p in diagnostic.poles]}")
    if not diagnostic.strictly_proper:
        raise HypothesisError('strict_properness', "G must be strictly proper")
    if not nl.odd:
        raise HypothesisError('oddness', f"{nl.label} is not flagged odd")
    try:
        asymptotic_bounds(nl)
    except MissingBoundsError as e:
        raise HypothesisError('bounds', str(e)) from e

    checks = {'stable': True, 'strictly_proper': True, 'odd': True, 'bounds': True}
    logger.info("Hypothesis checks passed", nonlinearity=nl.label, poles=len(diagnostic.poles))
    return checks


@lru_cache(maxsize=32)
def nyquist_region(G: TransferFunction, sweep_points: int = Config.SWEEP_POINTS,
                   sweep_decades: float = Config.SWEEP_DECADES,
                   tol: float = Config.GEOMETRY_TOL) -> HyperbolicRegion:
    """
    SRG(G): hull of the full Nyquist diagram.

    Sampled at omega = 0, on a log grid spanning sweep_decades either side of
    the pole magnitude centre, and at the high-frequency limit point.
    """
    center = pole_magnitude_center(G)
    omegas = np.logspace(math.log10(center) - sweep_decades,
                         math.log10(center) + sweep_decades, sweep_points)
    points = [eval_freq(G, 0.0)] + list(frequency_response(G, omegas)) + [high_frequency_limit(G)]
    region = hco(points, tol=tol)
    logger.debug("Nyquist hull built", samples=len(points), vertices=len(region.vertices))
    return region


@lru_cache(maxsize=4096)
def frequency_region(G: TransferFunction, omega: float,
                     tail_rel_tol: float = Config.TAIL_REL_TOL,
                     k_cap: int = Config.K_CAP,
                     tol: float = Config.GEOMETRY_TOL) -> HyperbolicRegion:
    """SRG_{U_omega}(G)^-1: inverted hull of the odd-harmonic samples"""
    samples = odd_harmonic_samples(G, omega, default_tail_tol(G, omega, tail_rel_tol), k_cap)
    return invert_region(hco(samples.values, tol=tol))


def _tau_sweep(region: HyperbolicRegion, slope_disk_interval: Interval,
               tau_steps: int) -> Tuple[float, float]:
    disk = disk_from_interval(*slope_disk_interval)
    taus = np.linspace(0.0, 1.0, tau_steps)
    distances = np.array([dist_region_disk(region, scaled_negated_disk(disk, float(t))) for t in taus])
    i = int(np.argmin(distances))
    return float(distances[i]), float(taus[i])


def wellposedness_sweep(G: TransferFunction, bounds: NonlinearityBounds,
                        tau_steps: int = Config.TAU_STEPS,
                        sweep_points: int = Config.SWEEP_POINTS,
                        sweep_decades: float = Config.SWEEP_DECADES,
                        tol: float = Config.GEOMETRY_TOL) -> Tuple[float, float]:
    """(r, tau at which the grid minimum is attained)"""
    diagnostic = check_stability(G)
    if not diagnostic.stable:
        raise HypothesisError('stability', "G is not stable")
    if not diagnostic.strictly_proper:
        raise HypothesisError('strict_properness', "G must be strictly proper")
    if not bounds.odd:
        raise HypothesisError('oddness', "nonlinearity is not flagged odd")

    region = invert_region(nyquist_region(G, sweep_points, sweep_decades, tol))
    r, tau = _tau_sweep(region, (bounds.a_star, bounds.b_star), tau_steps)
    if r <= 0:
        raise CertificationError('wellposedness',
                                 "inverse SRG of G meets -tau*D[a*, b*]", tau=tau)
    if tau == 0.0:
        logger.warning("Well-posedness minimum sits at tau = 0; tau grid may be too coarse",
                       r=r, tau_steps=tau_steps)
    logger.info("Well-posedness margin certified", r=r, tau=tau, tau_steps=tau_steps)
    return r, tau


@log_function_call
def wellposedness_margin(G: TransferFunction, bounds: NonlinearityBounds,
                         tau_steps: int = Config.TAU_STEPS, **sweep) -> float:
    """min over a tau grid of dist(SRG(G)^-1, -tau D[a*, b*])"""
    return wellposedness_sweep(G, bounds, tau_steps, **sweep)[0]


def margin_at(G: TransferFunction, omega: float, interval: Interval,
              tail_rel_tol: float = Config.TAIL_REL_TOL, k_cap: int = Config.K_CAP,
              tol: float = Config.GEOMETRY_TOL) -> float:
    """dist(SRG_{U_omega}(G)^-1, -D_[lo, hi]); zero when the sets meet"""
    if not omega > 0:
        raise PreconditionError(f"omega must be positive, got {omega}")
    return _margin(frequency_region(G, float(omega), tail_rel_tol, k_cap, tol), interval)


def _amplitude_holds(U: float, r: float, r_partial: float, amplitude: float) -> bool:
    """sqrt(2 U / (r r_partial)) <= A with both margins positive"""
    if r <= 0 or r_partial <= 0:
        return False
    return math.sqrt(2.0 * U / (r * r_partial)) <= amplitude


def _bisect_amplitude(margin: Callable[[Interval], float], nl: Nonlinearity, U: float,
                      tol: float, max_iters: int) -> AmplitudeBound:
    """Smallest self-consistent amplitude for one margin function"""
    if math.isnan(U) or U < 0:
        raise PreconditionError(f"U must be non-negative, got {U}")
    if U == 0:
        return AmplitudeBound(0.0, 0, True)

    r_inf = margin(sector_bounds(nl, math.inf))
    r_partial_inf = margin(slope_bounds(nl, math.inf))
    if r_inf <= 0 or r_partial_inf <= 0:
        return AmplitudeBound(math.inf, 0, False)
    if math.isinf(U):
        return AmplitudeBound(math.inf, 0, True)

    def holds(amplitude: float) -> bool:
        return _amplitude_holds(U, margin(sector_bounds(nl, amplitude)),
                                margin(slope_bounds(nl, amplitude)), amplitude)

    A_max = math.sqrt(2.0 * U / (r_inf * r_partial_inf))
    if not holds(A_max * (1.0 + 1e-12)):
        logger.warning("Amplitude predicate fails at the bracket top; bounds are not nested",
                       U=U, A_max=A_max)
        return AmplitudeBound(A_max, 0, False)

    # bounds jump at breakpoints, so the admissible set may split there;
    # bisect in the lowest piece whose top end already holds
    edges = [0.0] + [b for b in amplitude_breakpoints(nl) if b < A_max] + [A_max]
    lo, hi = edges[-2], A_max
    for bottom, top in zip(edges, edges[1:-1]):
        if holds(top):
            lo, hi = bottom, top
            break

    iters = 0
    while hi - lo > tol and iters < max_iters:
        mid = 0.5 * (lo + hi)
        if holds(mid):
            hi = mid
        else:
            lo = mid
        iters += 1

    if hi - lo > tol:
        logger.warning("Amplitude bisection stopped before reaching tolerance",
                       U=U, width=hi - lo, iters=iters)
    return AmplitudeBound(hi, iters, True)


def amplitude_fixed_point(G: TransferFunction, nl: Nonlinearity, omega: float, U: float,
                          tol: float = Config.BISECTION_TOL,
                          max_iters: int = Config.MAX_BISECTION_ITERS,
                          tail_rel_tol: float = Config.TAIL_REL_TOL,
                          k_cap: int = Config.K_CAP,
                          geometry_tol: float = Config.GEOMETRY_TOL) -> AmplitudeBound:
    """
    A_{omega,U} = inf{A >= 0 : sqrt(2 lambda_{omega,A} lambda'_{omega,A} U) <= A}.

    lambda = 1/r_{omega,A} uses the sector interval and lambda' = 1/r'_{omega,A}
    the slope interval. Bisection runs on [0, A_max] with
    A_max = sqrt(2 lambda_omega lambda'_omega U) from the asymptotic margins.
    """
    def margin(interval: Interval) -> float:
        return margin_at(G, omega, interval, tail_rel_tol, k_cap, geometry_tol)

    return _bisect_amplitude(margin, nl, U, tol, max_iters)


def satisfies_amplitude_bound(G: TransferFunction, nl: Nonlinearity, omega: float, U: float,
                              amplitude: float, **harmonic) -> bool:
    """The bisection predicate at a single amplitude"""
    return _amplitude_holds(U, margin_at(G, omega, sector_bounds(nl, amplitude), **harmonic),
                            margin_at(G, omega, slope_bounds(nl, amplitude), **harmonic), amplitude)


def _gain_record(config: AnalysisConfig, omega: float, U: float,
                 floor: float = 0.0) -> GainRecord:
    """One grid point; floor carries the previous amplitude along a U column"""
    G, nl = config.system, config.nonlinearity
    options = config.harmonic_options

    r_inf = margin_at(G, omega, sector_bounds(nl, math.inf), **options)
    bound = amplitude_fixed_point(G, nl, omega, U, config.bisection_tol,
                                  config.max_bisection_iters, options['tail_rel_tol'],
                                  options['k_cap'], options['tol'])
    amplitude = max(bound.A_bound, floor)

    r = margin_at(G, omega, sector_bounds(nl, amplitude), **options)
    r_partial = margin_at(G, omega, slope_bounds(nl, amplitude), **options)
    feasible = bound.feasible and r > 0
    return GainRecord(
        omega=omega,
        U=U,
        r_omega_A=r,
        r_partial_omega_A=r_partial,
        A_bound=amplitude,
        gamma=1.0 / r if r > 0 else math.inf,
        r_omega_inf=r_inf,
        bisection_iters=bound.iters,
        feasible=feasible,
    )


def _gain_column(config: AnalysisConfig, omega: float) -> List[GainRecord]:
    records = []
    floor = 0.0
    for U in config.U_grid:
        record = _gain_record(config, omega, U, floor)
        if record.feasible:
            # a larger amplitude is still a valid bound; keeps the column monotone
            floor = record.A_bound
        records.append(record)
    logger.debug("Gain column finished", omega=omega,
                 feasible=sum(r.feasible for r in records), points=len(records))
    return records


@log_function_call
def gain_surface(config: AnalysisConfig) -> GainSurface:
    """Certified (omega, U) gain and amplitude surface"""
    G, nl = config.system, config.nonlinearity
    hypotheses = check_hypotheses(G, nl)
    bounds = nonlinearity_bounds(nl)

    r, tau = wellposedness_sweep(G, bounds, config.tau_steps, **config.sweep_options)
    hypotheses['wellposed'] = True
    global_gain = _global_gain(G, bounds, config.sweep_options)

    with ThreadPoolExecutor(max_workers=config.workers) as pool:
        columns = list(pool.map(lambda omega: _gain_column(config, omega), config.omega_grid))

    gamma_inf = tuple(
        1.0 / column[0].r_omega_inf if column[0].r_omega_inf > 0 else math.inf
        for column in columns
    )
    records = tuple(record for column in columns for record in column)

    infeasible = sum(not record.feasible for record in records)
    if infeasible:
        logger.warning("Surface contains infeasible points", infeasible=infeasible,
                       points=len(records))
    logger.info("Gain surface computed", omegas=len(config.omega_grid), Us=len(config.U_grid),
                r=r, global_gain=global_gain)

    return GainSurface(config=config, records=records, wellposedness_margin=r, tau_argmin=tau,
                       gamma_inf=gamma_inf, global_gain=global_gain, hypotheses=hypotheses)


def analyze_point(config: AnalysisConfig, omega: float, U: float) -> GainRecord:
    """Single (omega, U) point; U = math.inf gives the gamma_omega column"""
    check_hypotheses(config.system, config.nonlinearity)
    wellposedness_sweep(config.system, nonlinearity_bounds(config.nonlinearity),
                        config.tau_steps, **config.sweep_options)
    return _gain_record(config, float(omega), float(U))


def _global_gain(G: TransferFunction, bounds: NonlinearityBounds, sweep: Dict) -> float:
    region = invert_region(nyquist_region(G, **sweep))
    distance = _margin(region, (bounds.c_star, bounds.d_star))
    return 1.0 / distance if distance > 0 else math.inf


def _sweep_kwargs(sweep_points: Optional[int], sweep_decades: Optional[float]) -> Dict:
    return {
        'sweep_points': Config.SWEEP_POINTS if sweep_points is None else sweep_points,
        'sweep_decades': Config.SWEEP_DECADES if sweep_decades is None else sweep_decades,
        'tol': Config.GEOMETRY_TOL,
    }


def global_l2_gain(G: TransferFunction, nl: Nonlinearity, tau_steps: int = Config.TAU_STEPS,
                   sweep_points: int = None, sweep_decades: float = None) -> float:
    """1 / dist(SRG(G)^-1, -D[c*, d*]), after the well-posedness sweep"""
    check_hypotheses(G, nl)
    bounds = nonlinearity_bounds(nl)
    sweep = _sweep_kwargs(sweep_points, sweep_decades)
    wellposedness_sweep(G, bounds, tau_steps, **sweep)
    return _global_gain(G, bounds, sweep)


def global_derivative_gain(G: TransferFunction, nl: Nonlinearity,
                           tau_steps: int = Config.TAU_STEPS,
                           sweep_points: int = None, sweep_decades: float = None) -> float:
    """
    1 / dist(SRG(G)^-1, -D[a*, b*]).

    Bounds ||y'|| / ||u'|| for inputs that start at zero, since the derivative
    map of the loop has G in the same place and the slope disk in place of
    the sector disk.
    """
    check_hypotheses(G, nl)
    bounds = nonlinearity_bounds(nl)
    sweep = _sweep_kwargs(sweep_points, sweep_decades)
    wellposedness_sweep(G, bounds, tau_steps, **sweep)
    region = invert_region(nyquist_region(G, **sweep))
    distance = _margin(region, (bounds.a_star, bounds.b_star))
    return 1.0 / distance if distance > 0 else math.inf


def amplitude_gain(G: TransferFunction, nl: Nonlinearity, U: float,
                   tol: float = Config.BISECTION_TOL,
                   max_iters: int = Config.MAX_BISECTION_ITERS,
                   sweep_points: int = None, sweep_decades: float = None) -> Tuple[float, float]:
    """
    (A_U, gamma_U) for inputs starting at zero with ||u|| ||u'|| <= U.

    Same bisection as amplitude_fixed_point against the full Nyquist hull
    instead of the odd-harmonic one, i.e. the omega -> 0 edge of the surface.
    """
    check_hypotheses(G, nl)
    bounds = nonlinearity_bounds(nl)
    sweep = _sweep_kwargs(sweep_points, sweep_decades)
    wellposedness_sweep(G, bounds, Config.TAU_STEPS, **sweep)
    region = invert_region(nyquist_region(G, **sweep))

    def margin(interval: Interval) -> float:
        return _margin(region, interval)

    bound = _bisect_amplitude(margin, nl, U, tol, max_iters)
    if not bound.feasible and math.isinf(bound.A_bound):
        return (math.inf, math.inf)
    distance = margin(sector_bounds(nl, bound.A_bound))
    return (bound.A_bound, 1.0 / distance if distance > 0 else math.inf)
