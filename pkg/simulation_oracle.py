"""
Time-domain oracle for certified gain surfaces
RK4 simulation of the Lur'e loop, periodic steady-state extraction and empirical bound checks
"""

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from config import Config
from errors import PreconditionError, SimulationDivergedError
from lti_systems import StateSpace, to_state_space
from lure_gain import GainRecord, GainSurface
from nonlinearities import Nonlinearity, eval_nl
from utils.logger import log_function_call, logger

Term = Tuple[int, float, float]


@dataclass(frozen=True)
class PeriodicInput:
    """u(t) = sum of amplitude * sin(k omega t + phase) over odd k"""
    omega: float
    coefficients: Tuple[Term, ...] = ()

    def __post_init__(self):
        if not self.omega > 0:
            raise PreconditionError(f"omega must be positive, got {self.omega}")
        terms = tuple((int(k), float(a), float(p)) for k, a, p in self.coefficients)
        for k, _, _ in terms:
            if k <= 0 or k % 2 == 0:
                raise PreconditionError(f"harmonic {k} is not an odd positive integer")
        object.__setattr__(self, 'coefficients', terms)

    @property
    def period(self) -> float:
        return 2.0 * math.pi / self.omega

    def phasors(self) -> Dict[int, complex]:
        """Complex amplitude per harmonic (repeated harmonics add up)"""
        out: Dict[int, complex] = {}
        for k, amplitude, phase in self.coefficients:
            out[k] = out.get(k, 0j) + amplitude * complex(math.cos(phase), math.sin(phase))
        return out

    def evaluate(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        u = np.zeros_like(t)
        for k, amplitude, phase in self.coefficients:
            u += amplitude * np.sin(k * self.omega * t + phase)
        return u

    def derivative(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        du = np.zeros_like(t)
        for k, amplitude, phase in self.coefficients:
            du += amplitude * k * self.omega * np.cos(k * self.omega * t + phase)
        return du

    def as_dict(self) -> Dict:
        return {'omega': self.omega,
                'coefficients': [[k, a, p] for k, a, p in self.coefficients]}


@dataclass(frozen=True)
class SimResult:
    dt: float
    times: np.ndarray
    u_samples: np.ndarray
    e_samples: np.ndarray
    y_samples: np.ndarray
    states: np.ndarray
    steps_per_period: int
    diverged: bool = False

    @property
    def periods(self) -> int:
        return (len(self.times) - 1) // self.steps_per_period


@dataclass(frozen=True)
class SteadyState:
    period_samples: np.ndarray
    rms: float
    sup: float
    converged: bool
    periods_used: int
    derivative_norm: float = 0.0


@dataclass
class ValidationReport:
    """Outcome of validate_surface; as_dict is deterministic for a fixed seed"""
    seed: int
    margin: float
    inputs_per_point: int
    points: List[Dict] = field(default_factory=list)
    violations: List[Dict] = field(default_factory=list)
    unconverged: int = 0
    skipped: int = 0

    @property
    def passed(self) -> bool:
        return not self.violations

    def as_dict(self) -> Dict:
        return {
            'passed': self.passed,
            'seed': self.seed,
            'margin': self.margin,
            'inputs_per_point': self.inputs_per_point,
            'points': self.points,
            'violations': self.violations,
            'unconverged': self.unconverged,
            'skipped': self.skipped,
        }


def render_input(inp: PeriodicInput, dt: float, n_periods: int) -> np.ndarray:
    """u sampled at 0, dt, 2dt, ... up to n_periods * T"""
    if not dt > 0 or dt > inp.period / Config.MIN_STEPS_PER_PERIOD * (1 + 1e-12):
        raise PreconditionError(
            f"dt = {dt:g} must lie in (0, T/{Config.MIN_STEPS_PER_PERIOD}] for T = {inp.period:g}")
    n = int(round(n_periods * inp.period / dt))
    return inp.evaluate(np.arange(n + 1) * dt)


def _one_period(samples: np.ndarray, dt: float, T: float) -> np.ndarray:
    samples = np.asarray(samples, dtype=float)
    n = int(round(T / dt))
    if len(samples) == n + 1:
        return samples[:-1]
    if len(samples) != n:
        raise PreconditionError(f"expected one period of {n} samples, got {len(samples)}")
    return samples


def period_norms(samples: np.ndarray, dt: float) -> Tuple[float, float]:
    """(||u||_T, ||u'||_T) of one periodic window; u' by central differences"""
    derivative = (np.roll(samples, -1) - np.roll(samples, 1)) / (2.0 * dt)
    return (math.sqrt(float(np.sum(samples ** 2)) * dt),
            math.sqrt(float(np.sum(derivative ** 2)) * dt))


def harmonic_energy(u_samples: np.ndarray, dt: float, T: float) -> float:
    """U = ||u||_T ||u'||_T over one period"""
    norm, derivative_norm = period_norms(_one_period(u_samples, dt, T), dt)
    return norm * derivative_norm


def input_harmonic_energy(inp: PeriodicInput) -> float:
    """Closed form pi * sqrt(sum |c_k|^2 * sum k^2 |c_k|^2)"""
    phasors = inp.phasors()
    power = sum(abs(c) ** 2 for c in phasors.values())
    derivative_power = sum(k * k * abs(c) ** 2 for k, c in phasors.items())
    return math.pi * math.sqrt(power * derivative_power)


def input_rms(inp: PeriodicInput) -> float:
    return math.sqrt(sum(abs(c) ** 2 for c in inp.phasors().values()) / 2.0)


def input_derivative_norm(inp: PeriodicInput) -> float:
    """||u'||_T in closed form"""
    phasors = inp.phasors()
    return math.sqrt(inp.period / 2.0 * sum((k * inp.omega) ** 2 * abs(c) ** 2
                                            for k, c in phasors.items()))


def sobolev_sup_bound(samples: np.ndarray, dt: float) -> float:
    """sqrt(2 ||u||_T ||u'||_T), an upper bound on max |u| for a periodic window"""
    norm, derivative_norm = period_norms(np.asarray(samples, dtype=float), dt)
    return math.sqrt(2.0 * norm * derivative_norm)


def sample_input(omega: float, U: float, rng: np.random.Generator,
                 harmonics: Sequence[int] = Config.VALIDATION_HARMONICS,
                 fill: float = Config.ENERGY_FILL) -> PeriodicInput:
    """Random odd-harmonic input rescaled to harmonic energy fill * U"""
    if not 0 < U < math.inf:
        raise PreconditionError(f"U must be positive and finite, got {U}")
    amplitudes = rng.uniform(0.0, 1.0, len(harmonics))
    phases = rng.uniform(0.0, 2.0 * math.pi, len(harmonics))
    draft = PeriodicInput(omega, tuple(zip(harmonics, amplitudes, phases)))
    scale = math.sqrt(fill * U / input_harmonic_energy(draft))
    return PeriodicInput(omega, tuple((k, a * scale, p) for k, a, p in draft.coefficients))


def choose_step(period: float, ss: StateSpace,
                steps_per_period: int = Config.STEPS_PER_PERIOD) -> float:
    """T / n with n >= steps_per_period and dt <= factor / |fastest pole|"""
    n = max(steps_per_period, Config.MIN_STEPS_PER_PERIOD)
    if ss.order:
        fastest = float(np.max(np.abs(np.linalg.eigvals(ss.A))))
        if fastest > 0:
            n = max(n, int(math.ceil(period * fastest / Config.POLE_STEP_FACTOR)))
    return period / n


def simulate_lure(ss: StateSpace, nl: Nonlinearity, inp: PeriodicInput, dt: float,
                  max_periods: int = Config.MAX_PERIODS, steady_tol: Optional[float] = None,
                  raise_on_divergence: bool = True) -> SimResult:
    """
    Fixed-step RK4 of x' = Ax + B(u - phi(Cx)), y = Cx from x(0) = 0.

    dt must divide the input period. With steady_tol set, integration stops
    after the first period (from the third on) whose y window matches the
    previous one within steady_tol.
    """
    if ss.D != 0:
        raise PreconditionError("simulation needs a strictly proper realization (D = 0)")
    n = int(round(inp.period / dt))
    if abs(n * dt - inp.period) > 1e-9 * inp.period:
        raise PreconditionError(f"dt = {dt:g} does not divide the period {inp.period:g}")
    if n < Config.MIN_STEPS_PER_PERIOD:
        raise PreconditionError(f"{n} steps per period is below {Config.MIN_STEPS_PER_PERIOD}")
    if ss.order:
        fastest = float(np.max(np.abs(np.linalg.eigvals(ss.A))))
        if fastest * dt > 2.5:
            raise PreconditionError(f"dt = {dt:g} is outside the RK4 stability region "
                                    f"for a pole of magnitude {fastest:g}")

    A, b, c = ss.A, ss.B[:, 0], ss.C[0]

    # input at every half step of one period, reused each period
    u_half = inp.evaluate(np.arange(2 * n + 1) * (dt / 2.0))

    def f(x, u):
        return A @ x + b * (u - eval_nl(nl, float(c @ x)))

    total = n * max_periods
    states = np.zeros((total + 1, ss.order))
    x = np.zeros(ss.order)
    diverged = False
    steps = 0

    for period in range(max_periods):
        for i in range(n):
            u0, um, u1 = u_half[2 * i], u_half[2 * i + 1], u_half[2 * i + 2]
            k1 = f(x, u0)
            k2 = f(x + 0.5 * dt * k1, um)
            k3 = f(x + 0.5 * dt * k2, um)
            k4 = f(x + dt * k3, u1)
            x = x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            steps += 1
            states[steps] = x

            norm = float(np.linalg.norm(x))
            if not norm <= Config.DIVERGENCE_LIMIT:
                if raise_on_divergence:
                    raise SimulationDivergedError(steps * dt, norm)
                logger.warning("Simulation diverged", time=steps * dt, state_norm=norm)
                diverged = True
                break
        if diverged:
            break

        if steady_tol is not None and period >= 2:
            y_last = states[steps - n + 1:steps + 1] @ c
            y_prev = states[steps - 2 * n + 1:steps - n + 1] @ c
            if _windows_agree(y_last, y_prev, steady_tol):
                break

    states = states[:steps + 1]
    times = np.arange(steps + 1) * dt
    u = np.tile(u_half[0:2 * n:2], steps // n + 1)[:steps + 1]
    y = states @ c
    e = u - eval_nl(nl, y)
    return SimResult(dt=dt, times=times, u_samples=u, e_samples=e, y_samples=y,
                     states=states, steps_per_period=n, diverged=diverged)


def _windows_agree(current: np.ndarray, previous: np.ndarray, tol: float) -> bool:
    scale = math.sqrt(float(np.mean(current ** 2)))
    difference = math.sqrt(float(np.mean((current - previous) ** 2)))
    if scale == 0.0:
        return difference == 0.0
    return difference < tol * scale


def extract_steady_state(sim: SimResult, T: float, tol: float = Config.STEADY_TOL) -> SteadyState:
    """Last full period of y and whether it repeats the one before"""
    n = int(round(T / sim.dt))
    periods = (len(sim.y_samples) - 1) // n
    if sim.diverged:
        return SteadyState(period_samples=np.array([]), rms=math.inf, sup=math.inf,
                           converged=False, periods_used=periods, derivative_norm=math.inf)
    if periods < 3:
        raise PreconditionError(f"steady-state extraction needs at least 3 periods, got {periods}")

    end = periods * n
    window = sim.y_samples[end - n:end]
    previous = sim.y_samples[end - 2 * n:end - n]
    converged = _windows_agree(window, previous, tol)
    if not converged:
        logger.debug("Steady state not reached", periods=periods, tol=tol)

    return SteadyState(
        period_samples=window,
        rms=math.sqrt(float(np.mean(window ** 2))),
        sup=float(np.max(np.abs(window))),
        converged=converged,
        periods_used=periods,
        derivative_norm=period_norms(window, sim.dt)[1],
    )


def _pick_records(surface: GainSurface, points: int, rng: np.random.Generator) -> List[GainRecord]:
    candidates = [r for r in surface.records
                  if r.feasible and 0 < r.U < math.inf and math.isfinite(r.gamma)]
    if len(candidates) <= points:
        return candidates
    chosen = np.sort(rng.choice(len(candidates), size=points, replace=False))
    return [candidates[i] for i in chosen]


@log_function_call
def validate_surface(surface: GainSurface, samples_per_point: int = Config.INPUTS_PER_POINT,
                     points: int = Config.VALIDATION_POINTS, seed: int = Config.VALIDATION_SEED,
                     margin: float = Config.VALIDATION_MARGIN,
                     steps_per_period: int = Config.STEPS_PER_PERIOD,
                     max_periods: int = Config.MAX_PERIODS,
                     steady_tol: float = Config.STEADY_TOL) -> ValidationReport:
    """
    Simulate random inputs at sampled grid points and compare with the certificate.

    Checked per input: RMS gain against gamma, steady-state sup against
    A_bound and ||y'||_T against ||u'||_T / r'_{omega,A}, all with a relative
    margin. Records with U = 0 or U = inf are skipped.
    """
    rng = np.random.default_rng(seed)
    ss = to_state_space(surface.config.system)
    nl = surface.config.nonlinearity
    report = ValidationReport(seed=seed, margin=margin, inputs_per_point=samples_per_point)
    report.skipped = sum(1 for r in surface.records if not (0 < r.U < math.inf))

    for record in _pick_records(surface, points, rng):
        worst = {'rms_gain': 0.0, 'sup': 0.0, 'derivative_gain': 0.0}
        for _ in range(samples_per_point):
            inp = sample_input(record.omega, record.U, rng)
            dt = choose_step(inp.period, ss, steps_per_period)
            try:
                sim = simulate_lure(ss, nl, inp, dt, max_periods, steady_tol)
            except SimulationDivergedError as e:
                report.violations.append(_violation(record, inp, 'divergence', e.state_norm, math.inf))
                continue
            steady = extract_steady_state(sim, inp.period, steady_tol)
            if not steady.converged:
                report.unconverged += 1
                logger.warning("Validation input did not settle", omega=record.omega, U=record.U,
                               periods=steady.periods_used)

            rms_gain = steady.rms / input_rms(inp)
            derivative_gain = steady.derivative_norm / input_derivative_norm(inp)
            checks = (
                ('rms_gain', rms_gain, record.gamma),
                ('sup', steady.sup, record.A_bound),
                ('derivative_gain', derivative_gain,
                 1.0 / record.r_partial_omega_A if record.r_partial_omega_A > 0 else math.inf),
            )
            for name, measured, bound in checks:
                worst[name] = max(worst[name], measured)
                if measured > bound * (1.0 + margin):
                    report.violations.append(_violation(record, inp, name, measured, bound))

        report.points.append({
            'omega': record.omega,
            'U': record.U,
            'gamma': record.gamma,
            'A_bound': record.A_bound,
            'max_rms_gain': worst['rms_gain'],
            'max_sup': worst['sup'],
            'max_derivative_gain': worst['derivative_gain'],
        })

    for violation in report.violations:
        logger.error("Certified bound violated", **{k: v for k, v in violation.items() if k != 'input'})
    logger.info("Validation finished", points=len(report.points), violations=len(report.violations),
                unconverged=report.unconverged)
    return report


def _violation(record: GainRecord, inp: PeriodicInput, check: str,
               measured: float, bound: float) -> Dict:
    return {
        'omega': record.omega,
        'U': record.U,
        'check': check,
        'measured': measured,
        'bound': bound,
        'input': inp.as_dict(),
    }
