"""
Command line entry point for SRG Bode
srg-bode surface | analyze | validate | lti-reference
"""

import argparse
import cmath
import math
import sys
from typing import List, Optional

import numpy as np
import pandas as pd

from config import VERSION
from errors import ConfigError, PoleOnAxisError, SrgBodeError
from lti_systems import check_stability, eval_freq, linearized_loop
from lure_gain import analyze_point, gain_surface
from nonlinearities import slope_bounds
from reporting import (
    atomic_write_text,
    lti_reference_csv_text,
    render_plot_script,
    write_metadata,
    write_surface_csv,
    write_validation_report,
)
from run_config import RunConfig, load_config
from simulation_oracle import validate_surface
from utils.logger import log_function_call, logger, performance_monitor

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_CERTIFICATION = 2
EXIT_VIOLATION = 3


class ArgumentParser(argparse.ArgumentParser):
    """argparse exits with 2 on usage errors; here 2 means a failed certificate"""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _amount(text: str) -> float:
    """float that also accepts inf"""
    value = float(text)
    if math.isnan(value):
        raise argparse.ArgumentTypeError("nan is not a valid value")
    return value


def build_parser() -> ArgumentParser:
    parser = ArgumentParser(
        prog='srg-bode',
        description='Certified frequency- and amplitude-dependent L2-gain bounds '
                    'for Lur\'e feedback systems.',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog='''
Examples:
  srg-bode surface --config configs/sine_loop.env --out results
  srg-bode analyze --config configs/sine_loop.env --omega 2 --U inf
  srg-bode validate --config configs/sine_loop.env --seed 0
  srg-bode lti-reference --config configs/sine_loop.env

Exit status: 0 success, 1 usage or configuration error,
2 certification failure, 3 validation violation.
''')
    parser.add_argument('--version', action='version', version=f"%(prog)s {VERSION}")
    parser.add_argument('--log-level', default=None,
                        help='Logging threshold (default: SRG_BODE_LOG_LEVEL or INFO)')
    parser.add_argument('--profile', default=None, choices=['default', 'development', 'testing'],
                        help='Configuration profile supplying the defaults')

    commands = parser.add_subparsers(dest='command', metavar='COMMAND')
    commands.required = True

    def add_command(name, help_text):
        sub = commands.add_parser(name, help=help_text)
        sub.add_argument('--config', required=True, help='Run configuration document')
        sub.add_argument('--out', default=None, help='Output directory (overrides output.dir)')
        return sub

    add_command('surface', 'Certify the full (omega, U) grid and write CSV, metadata and plot script')

    analyze = add_command('analyze', 'Certify a single (omega, U) point and print the record')
    analyze.add_argument('--omega', type=_amount, required=True, help='Input frequency [rad/s]')
    analyze.add_argument('--U', type=_amount, required=True,
                         help='Harmonic energy bound (inf for the U -> inf column)')

    validate = add_command('validate', 'Simulate random inputs against the certified surface')
    validate.add_argument('--seed', type=int, default=None, help='Random seed (overrides validation.seed)')
    validate.add_argument('--points', type=int, default=None, help='Grid points to sample')
    validate.add_argument('--inputs-per-point', type=int, default=None, help='Random inputs per point')

    add_command('lti-reference', 'Write |G/(1 + a G)| over the omega grid, a = slope at zero')
    return parser


def _timed_surface(run: RunConfig):
    performance_monitor.reset()
    performance_monitor.start_timer('gain_surface')
    surface = gain_surface(run.analysis)
    performance_monitor.end_timer('gain_surface')
    return surface


@log_function_call
def cmd_surface(run: RunConfig) -> int:
    """Surface CSV, metadata sidecar and plot script"""
    surface = _timed_surface(run)

    csv_path = run.output_path('.csv')
    write_surface_csv(surface, csv_path)
    atomic_write_text(run.output_path('_plot.py'), render_plot_script(csv_path.name))
    write_metadata(surface, run.output_path('_meta.json'), performance_monitor.timings(), run.source)

    logger.info("Surface written", csv=str(csv_path), rows=len(surface.records))
    return EXIT_OK


@log_function_call
def cmd_analyze(run: RunConfig, omega: float, U: float, stream=None) -> int:
    """Print every field of one GainRecord"""
    stream = stream or sys.stdout
    if not omega > 0 or not math.isfinite(omega):
        raise ConfigError(f"--omega must be positive and finite, got {omega}")
    if U < 0:
        raise ConfigError(f"--U must be non-negative, got {U}")

    record = analyze_point(run.analysis, omega, U)
    for name, value in record.as_dict().items():
        if isinstance(value, bool):
            value = 'true' if value else 'false'
        elif isinstance(value, float):
            value = repr(value)
        stream.write(f"{name} = {value}\n")
    return EXIT_OK


@log_function_call
def cmd_validate(run: RunConfig, points: Optional[int] = None,
                 inputs_per_point: Optional[int] = None) -> int:
    """JSON validation report; exit 3 on any violation"""
    surface = _timed_surface(run)
    report = validate_surface(
        surface,
        samples_per_point=inputs_per_point or run.inputs_per_point,
        points=points or run.validation_points,
        seed=run.seed,
        margin=run.validation_margin,
        steps_per_period=run.steps_per_period,
        max_periods=run.max_periods,
        steady_tol=run.steady_tol,
    )
    write_validation_report(report.as_dict(), run.output_path('_validation.json'))

    if not report.passed:
        first = report.violations[0]
        sys.stderr.write(f"validation failed: {len(report.violations)} violation(s); first: "
                         f"{first['check']} at omega={first['omega']:g}, U={first['U']:g} "
                         f"measured {first['measured']:.6g} > bound {first['bound']:.6g}\n")
        return EXIT_VIOLATION
    return EXIT_OK


def _reference_row(loop, omega: float):
    """(magnitude, phase_deg); a pole on the axis reads (inf, nan)"""
    try:
        value = eval_freq(loop, omega)
    except PoleOnAxisError:
        logger.warning("Linearized loop has a pole on the imaginary axis", omega=omega)
        return math.inf, math.nan
    return abs(value), math.degrees(cmath.phase(value))


def lti_reference_frame(run: RunConfig) -> pd.DataFrame:
    """|R_LTI(jw)| and phase for R_LTI = G / (1 + a G), with a DC row first"""
    G, nl = run.analysis.system, run.analysis.nonlinearity
    slope, _ = slope_bounds(nl, 0.0)
    loop = linearized_loop(G, slope)
    if not check_stability(loop).stable:
        logger.warning("Linearized loop is not stable; reference magnitudes are formal",
                       slope=slope)

    omegas = np.concatenate([[0.0], run.analysis.omega_grid])
    rows = [_reference_row(loop, float(omega)) for omega in omegas]
    return pd.DataFrame({
        'omega': omegas,
        'magnitude': [magnitude for magnitude, _ in rows],
        'phase_deg': [phase for _, phase in rows],
    })


@log_function_call
def cmd_lti_reference(run: RunConfig) -> int:
    path = run.output_path('_lti_reference.csv')
    atomic_write_text(path, lti_reference_csv_text(lti_reference_frame(run)))
    logger.info("LTI reference written", csv=str(path))
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.log_level:
        logger.set_level(args.log_level)

    try:
        run = load_config(args.config, profile=args.profile).with_output(
            output_dir=args.out, seed=getattr(args, 'seed', None))

        if args.command == 'surface':
            return cmd_surface(run)
        if args.command == 'analyze':
            return cmd_analyze(run, args.omega, args.U)
        if args.command == 'validate':
            return cmd_validate(run, args.points, args.inputs_per_point)
        if args.command == 'lti-reference':
            return cmd_lti_reference(run)
        parser.error(f"unknown command {args.command}")

    except SrgBodeError as e:
        logger.log_error_with_context(e, {'command': args.command})
        sys.stderr.write(f"srg-bode: {e}\n")
        return e.exit_status
    except OSError as e:
        logger.log_error_with_context(e, {'command': args.command})
        sys.stderr.write(f"srg-bode: {e}\n")
        return EXIT_USAGE
    return EXIT_USAGE


if __name__ == '__main__':
    sys.exit(main())
