"""
Run configuration documents for SRG Bode
Flat dotted key = value files parsed with python-dotenv and validated into a RunConfig
"""

import math
from dataclasses import dataclass, replace
from io import StringIO
from pathlib import Path
from typing import Callable, Dict, List, Optional

import numpy as np
from dotenv import dotenv_values

from config import Config, get_config
from errors import ConfigError, PreconditionError
from lti_systems import TransferFunction
from lure_gain import AnalysisConfig
from nonlinearities import Nonlinearity, deadzone, identity, linear, saturation, sine

KNOWN_KEYS = {
    'system.num', 'system.den',
    'nonlinearity.kind', 'nonlinearity.limit', 'nonlinearity.width', 'nonlinearity.gain',
    'grid.omega.min', 'grid.omega.max', 'grid.omega.count', 'grid.omega.spacing', 'grid.omega.values',
    'grid.U.min', 'grid.U.max', 'grid.U.count', 'grid.U.spacing', 'grid.U.values',
    'grid.U.include_zero',
    'analysis.tau_steps', 'analysis.bisection_tol', 'analysis.max_bisection_iters',
    'analysis.tail_rel_tol', 'analysis.k_cap', 'analysis.geometry_tol',
    'analysis.sweep_points', 'analysis.sweep_decades', 'analysis.workers',
    'validation.seed', 'validation.points', 'validation.inputs_per_point', 'validation.margin',
    'validation.steps_per_period', 'validation.max_periods', 'validation.steady_tol',
    'output.dir', 'output.prefix',
}


@dataclass(frozen=True)
class RunConfig:
    """An AnalysisConfig plus validation settings and output location"""
    analysis: AnalysisConfig
    output_dir: str = Config.OUTPUT_DIR
    output_prefix: str = Config.OUTPUT_PREFIX
    seed: int = Config.VALIDATION_SEED
    validation_points: int = Config.VALIDATION_POINTS
    inputs_per_point: int = Config.INPUTS_PER_POINT
    validation_margin: float = Config.VALIDATION_MARGIN
    steps_per_period: int = Config.STEPS_PER_PERIOD
    max_periods: int = Config.MAX_PERIODS
    steady_tol: float = Config.STEADY_TOL
    source: Optional[str] = None

    def with_output(self, output_dir: Optional[str] = None, seed: Optional[int] = None) -> 'RunConfig':
        """Copy with command-line overrides applied"""
        changes = {}
        if output_dir is not None:
            changes['output_dir'] = output_dir
        if seed is not None:
            changes['seed'] = seed
        return replace(self, **changes)

    def output_path(self, suffix: str) -> Path:
        return Path(self.output_dir) / f"{self.output_prefix}{suffix}"


def _number_list(key: str, raw: str) -> List[float]:
    text = raw.strip()
    if text.startswith('[') and text.endswith(']'):
        text = text[1:-1]
    parts = [p.strip() for p in text.split(',') if p.strip()]
    try:
        return [float(p) for p in parts]
    except ValueError as e:
        raise ConfigError(f"{key}: expected a list of numbers, got {raw!r}") from e


def _typed(values: Dict[str, str], key: str, cast: Callable, default=None):
    raw = values.get(key)
    if raw is None or raw.strip() == '':
        return default
    try:
        return cast(raw.strip())
    except ValueError as e:
        raise ConfigError(f"{key}: cannot read {raw!r} as {cast.__name__}") from e


def _flag(text: str) -> bool:
    lowered = text.lower()
    if lowered in ('true', 'yes', '1', 'on'):
        return True
    if lowered in ('false', 'no', '0', 'off'):
        return False
    raise ValueError(text)


def _grid(values: Dict[str, str], name: str) -> List[float]:
    prefix = f"grid.{name}"
    explicit = values.get(f"{prefix}.values")
    if explicit:
        grid = _number_list(f"{prefix}.values", explicit)
    else:
        lo = _typed(values, f"{prefix}.min", float)
        hi = _typed(values, f"{prefix}.max", float)
        count = _typed(values, f"{prefix}.count", int)
        if lo is None or hi is None or count is None:
            raise ConfigError(f"{prefix}: give either {prefix}.values or min, max and count")
        spacing = _typed(values, f"{prefix}.spacing", str, 'log')
        if count < 1:
            raise ConfigError(f"{prefix}.count must be positive, got {count}")
        if spacing == 'log':
            if lo <= 0 or hi <= 0:
                raise ConfigError(f"{prefix}: log spacing needs positive min and max")
            grid = list(np.logspace(math.log10(lo), math.log10(hi), count))
        elif spacing == 'linear':
            grid = list(np.linspace(lo, hi, count))
        else:
            raise ConfigError(f"{prefix}.spacing must be 'log' or 'linear', got {spacing!r}")

    if _typed(values, f"{prefix}.include_zero", _flag, False) and (not grid or grid[0] != 0.0):
        grid = [0.0] + grid
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ConfigError(f"{prefix}: grid must be strictly increasing (no repeated values)")
    return grid


def _nonlinearity(values: Dict[str, str]) -> Nonlinearity:
    kind = values.get('nonlinearity.kind')
    if not kind:
        raise ConfigError("nonlinearity.kind is required")
    kind = kind.strip().lower()
    try:
        if kind == 'sine':
            return sine()
        if kind == 'saturation':
            return saturation(_typed(values, 'nonlinearity.limit', float, 1.0))
        if kind == 'deadzone':
            width = _typed(values, 'nonlinearity.width', float)
            if width is None:
                raise ConfigError("nonlinearity.width is required for a deadzone")
            return deadzone(width)
        if kind == 'identity':
            return identity()
        if kind == 'linear':
            gain = _typed(values, 'nonlinearity.gain', float)
            if gain is None:
                raise ConfigError("nonlinearity.gain is required for a linear nonlinearity")
            return linear(gain)
    except PreconditionError as e:
        raise ConfigError(f"nonlinearity: {e}") from e
    raise ConfigError(f"nonlinearity.kind {kind!r} is not one of sine, saturation, deadzone, "
                      f"identity, linear")


def _system(values: Dict[str, str]) -> TransferFunction:
    for key in ('system.num', 'system.den'):
        if key not in values or values[key] is None:
            raise ConfigError(f"{key} is required")
    num = _number_list('system.num', values['system.num'])
    den = _number_list('system.den', values['system.den'])
    if not den:
        raise ConfigError("system.den must list at least one coefficient")
    try:
        return TransferFunction(num=tuple(num), den=tuple(den))
    except PreconditionError as e:
        raise ConfigError(f"system: {e}") from e


def parse_config(text: str, profile: Optional[str] = None, source: Optional[str] = None) -> RunConfig:
    """Validate a run-config document; defaults come from the selected profile"""
    defaults = get_config(profile)
    values = dotenv_values(stream=StringIO(text), interpolate=False)

    unknown = sorted(key for key in values if key not in KNOWN_KEYS)
    if unknown:
        raise ConfigError(f"unknown configuration key(s): {', '.join(unknown)}")

    system = _system(values)
    nonlinearity = _nonlinearity(values)
    omega_grid = _grid(values, 'omega')
    U_grid = _grid(values, 'U')

    try:
        analysis = AnalysisConfig(
            system=system,
            nonlinearity=nonlinearity,
            omega_grid=tuple(omega_grid),
            U_grid=tuple(U_grid),
            tau_steps=_typed(values, 'analysis.tau_steps', int, defaults.TAU_STEPS),
            bisection_tol=_typed(values, 'analysis.bisection_tol', float, defaults.BISECTION_TOL),
            max_bisection_iters=_typed(values, 'analysis.max_bisection_iters', int,
                                       defaults.MAX_BISECTION_ITERS),
            tail_rel_tol=_typed(values, 'analysis.tail_rel_tol', float, defaults.TAIL_REL_TOL),
            k_cap=_typed(values, 'analysis.k_cap', int, defaults.K_CAP),
            geometry_tol=_typed(values, 'analysis.geometry_tol', float, defaults.GEOMETRY_TOL),
            sweep_points=_typed(values, 'analysis.sweep_points', int, defaults.SWEEP_POINTS),
            sweep_decades=_typed(values, 'analysis.sweep_decades', float, defaults.SWEEP_DECADES),
            workers=_typed(values, 'analysis.workers', int, defaults.workers()),
        )
    except PreconditionError as e:
        raise ConfigError(f"analysis: {e}") from e

    run = RunConfig(
        analysis=analysis,
        output_dir=_typed(values, 'output.dir', str, defaults.OUTPUT_DIR),
        output_prefix=_typed(values, 'output.prefix', str, defaults.OUTPUT_PREFIX),
        seed=_typed(values, 'validation.seed', int, defaults.VALIDATION_SEED),
        validation_points=_typed(values, 'validation.points', int, defaults.VALIDATION_POINTS),
        inputs_per_point=_typed(values, 'validation.inputs_per_point', int, defaults.INPUTS_PER_POINT),
        validation_margin=_typed(values, 'validation.margin', float, defaults.VALIDATION_MARGIN),
        steps_per_period=_typed(values, 'validation.steps_per_period', int, defaults.STEPS_PER_PERIOD),
        max_periods=_typed(values, 'validation.max_periods', int, defaults.MAX_PERIODS),
        steady_tol=_typed(values, 'validation.steady_tol', float, defaults.STEADY_TOL),
        source=source,
    )
    if run.validation_points < 1 or run.inputs_per_point < 1:
        raise ConfigError("validation.points and validation.inputs_per_point must be positive")
    if run.steps_per_period < Config.MIN_STEPS_PER_PERIOD:
        raise ConfigError(f"validation.steps_per_period must be at least {Config.MIN_STEPS_PER_PERIOD}")
    return run


def load_config(path: str, profile: Optional[str] = None) -> RunConfig:
    """Read and parse a run-config file"""
    try:
        text = Path(path).read_text(encoding='utf-8')
    except OSError as e:
        raise ConfigError(f"cannot read configuration {path}: {e}") from e
    return parse_config(text, profile=profile, source=str(path))
