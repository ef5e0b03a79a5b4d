"""
Test suite for run_config
Parsing and validation of key = value run documents
"""

import math
import os

import pytest

from errors import ConfigError
from run_config import RunConfig, load_config, parse_config

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
EXAMPLE = os.path.join(ROOT, 'configs', 'sine_loop.env')

MINIMAL = """
system.num = [1]
system.den = [2, 1]
nonlinearity.kind = sine
grid.omega.values = 0.5, 2
grid.U.values = 0.01, 1
"""


def document(**overrides):
    """MINIMAL with keys replaced (None removes a key)"""
    lines = {}
    for line in MINIMAL.strip().splitlines():
        key, value = line.split('=', 1)
        lines[key.strip()] = value.strip()
    for key, value in overrides.items():
        key = key.replace('__', '.')
        if value is None:
            lines.pop(key, None)
        else:
            lines[key] = value
    return '\n'.join(f"{k} = {v}" for k, v in lines.items()) + '\n'


class TestExampleDocument:
    """configs/sine_loop.env"""

    def test_loads(self):
        run = load_config(EXAMPLE)
        assert isinstance(run, RunConfig)
        assert run.analysis.system.num == (1.0,)
        assert run.analysis.system.den == (2.0, 1.0)
        assert run.analysis.nonlinearity.label == 'sine'
        assert run.analysis.tau_steps == 101
        assert run.output_prefix == 'sine_loop'
        assert run.source == EXAMPLE

    def test_grids(self):
        analysis = load_config(EXAMPLE).analysis
        assert len(analysis.omega_grid) == 40
        assert analysis.omega_grid[0] == pytest.approx(0.1)
        assert analysis.omega_grid[-1] == pytest.approx(100.0)
        assert len(analysis.U_grid) == 40
        ratios = [b / a for a, b in zip(analysis.U_grid, analysis.U_grid[1:])]
        assert max(ratios) == pytest.approx(min(ratios))

    def test_validation_settings(self):
        run = load_config(EXAMPLE)
        assert (run.seed, run.validation_points, run.inputs_per_point) == (0, 5, 10)


class TestParsing:
    """Field-level rules"""

    def test_minimal_uses_defaults(self):
        run = parse_config(document())
        assert run.analysis.omega_grid == (0.5, 2.0)
        assert run.analysis.U_grid == (0.01, 1.0)
        assert run.output_dir == 'results'
        assert run.steps_per_period == 2000

    def test_testing_profile(self):
        run = parse_config(document(), profile='testing')
        assert run.steps_per_period == 400
        assert run.analysis.sweep_points == 800

    def test_include_zero(self):
        run = parse_config(document(grid__U__include_zero='true'))
        assert run.analysis.U_grid == (0.0, 0.01, 1.0)

    def test_linear_spacing(self):
        run = parse_config(document(grid__omega__values=None, grid__omega__min='1',
                                    grid__omega__max='3', grid__omega__count='3',
                                    grid__omega__spacing='linear'))
        assert run.analysis.omega_grid == (1.0, 2.0, 3.0)

    def test_infinite_U(self):
        run = parse_config(document(grid__U__values='0.01, 1, inf'))
        assert math.isinf(run.analysis.U_grid[-1])

    def test_nonlinearity_kinds(self):
        assert parse_config(document(nonlinearity__kind='saturation',
                                     nonlinearity__limit='2')).analysis.nonlinearity.limit == 2.0
        assert parse_config(document(nonlinearity__kind='deadzone',
                                     nonlinearity__width='0.5')).analysis.nonlinearity.width == 0.5
        assert parse_config(document(nonlinearity__kind='identity')).analysis.nonlinearity.label == 'identity'

    def test_overrides(self):
        run = parse_config(document()).with_output(output_dir='elsewhere', seed=42)
        assert run.output_dir == 'elsewhere'
        assert run.seed == 42
        assert str(run.output_path('.csv')) == os.path.join('elsewhere', 'surface.csv')

    def test_unstable_system_still_parses(self):
        run = parse_config(document(system__den='[-1, 1]'))
        assert run.analysis.system.den == (-1.0, 1.0)


class TestRejections:
    """Every malformed document is a ConfigError (exit status 1)"""

    @pytest.mark.parametrize('overrides', [
        {'system__den': None},
        {'system__num': '[1, x]'},
        {'system__den': '[0, 0]'},
        {'nonlinearity__kind': None},
        {'nonlinearity__kind': 'relay'},
        {'nonlinearity__kind': 'deadzone'},
        {'nonlinearity__kind': 'saturation', 'nonlinearity__limit': '0'},
        {'nonlinearity__kind': 'linear'},
        {'grid__omega__values': '1, 1'},
        {'grid__omega__values': '0, 1'},
        {'grid__U__values': '1, 0.5'},
        {'grid__omega__values': None},
        {'grid__omega__values': None, 'grid__omega__min': '0', 'grid__omega__max': '1',
         'grid__omega__count': '3'},
        {'grid__omega__values': None, 'grid__omega__min': '1', 'grid__omega__max': '2',
         'grid__omega__count': '3', 'grid__omega__spacing': 'cubic'},
        {'analysis__tau_steps': '1'},
        {'analysis__tau_steps': 'many'},
        {'validation__points': '0'},
        {'validation__steps_per_period': '50'},
    ])
    def test_rejected(self, overrides):
        with pytest.raises(ConfigError) as excinfo:
            parse_config(document(**overrides))
        assert excinfo.value.exit_status == 1

    def test_unknown_key(self):
        with pytest.raises(ConfigError, match='grid.omega.cnt'):
            parse_config(document(grid__omega__cnt='3'))

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(str(tmp_path / 'absent.env'))


class TestWorkersEnvironment:
    """SRG_BODE_WORKERS"""

    def test_unset(self, monkeypatch):
        monkeypatch.delenv('SRG_BODE_WORKERS', raising=False)
        assert parse_config(MINIMAL).analysis.workers == 1

    def test_from_environment(self, monkeypatch):
        monkeypatch.setenv('SRG_BODE_WORKERS', '3')
        assert parse_config(MINIMAL).analysis.workers == 3
        assert parse_config(document(analysis__workers='2')).analysis.workers == 2

    @pytest.mark.parametrize('raw', ['many', '2.5', '0'])
    def test_malformed(self, monkeypatch, raw):
        monkeypatch.setenv('SRG_BODE_WORKERS', raw)
        with pytest.raises(ConfigError, match='SRG_BODE_WORKERS'):
            parse_config(MINIMAL)
