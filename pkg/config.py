"""
Configuration settings for SRG Bode
Centralized defaults for the certification engine, the simulation oracle and logging
"""

import os
from typing import Optional

from dotenv import load_dotenv

from errors import ConfigError

load_dotenv()

VERSION = '1.0.0'


class Config:
    """Base configuration class"""

    # Logging Configuration
    LOG_LEVEL = os.environ.get('SRG_BODE_LOG_LEVEL', 'INFO')
    LOG_FILE = os.environ.get('SRG_BODE_LOG_FILE') or None

    # Parallelism (grid columns evaluated concurrently); SRG_BODE_WORKERS overrides via workers()
    WORKERS = 1

    # Harmonic sampling of G(jk*omega)
    TAIL_REL_TOL = 1e-3
    TAIL_REFERENCE_HARMONIC = 9
    K_CAP = 10001

    # Full Nyquist sweep for SRG(G)
    SWEEP_POINTS = 2000
    SWEEP_DECADES = 4.0

    # Geometry predicates
    GEOMETRY_TOL = 1e-9
    STABILITY_MARGIN = 1e-9

    # Certificate
    TAU_STEPS = 101
    BISECTION_TOL = 1e-4
    MAX_BISECTION_ITERS = 60

    # Simulation oracle
    STEPS_PER_PERIOD = 2000
    MIN_STEPS_PER_PERIOD = 200
    POLE_STEP_FACTOR = 0.1
    STEADY_TOL = 1e-6
    MAX_PERIODS = 200
    DIVERGENCE_LIMIT = 1e9

    # Validation
    VALIDATION_SEED = 0
    VALIDATION_POINTS = 5
    INPUTS_PER_POINT = 10
    VALIDATION_MARGIN = 0.01
    ENERGY_FILL = 0.99
    VALIDATION_HARMONICS = (1, 3, 5)

    # Output
    OUTPUT_DIR = 'results'
    OUTPUT_PREFIX = 'surface'

    @classmethod
    def workers(cls) -> int:
        """SRG_BODE_WORKERS if set, else WORKERS"""
        raw = os.environ.get('SRG_BODE_WORKERS', '').strip()
        if not raw:
            return cls.WORKERS
        try:
            value = int(raw)
        except ValueError:
            raise ConfigError(f"SRG_BODE_WORKERS must be an integer, got {raw!r}") from None
        if value < 1:
            raise ConfigError(f"SRG_BODE_WORKERS must be at least 1, got {value}")
        return value


class DevelopmentConfig(Config):
    """Development configuration"""
    LOG_LEVEL = os.environ.get('SRG_BODE_LOG_LEVEL', 'DEBUG')


class TestingConfig(Config):
    """Testing configuration"""
    STEPS_PER_PERIOD = 400
    MAX_PERIODS = 80
    STEADY_TOL = 1e-7
    SWEEP_POINTS = 800


# Configuration mapping
config = {
    'development': DevelopmentConfig,
    'testing': TestingConfig,
    'default': Config
}


def get_config(profile: Optional[str] = None) -> type:
    """Resolve a profile name (or SRG_BODE_PROFILE) to its configuration class"""
    name = profile or os.environ.get('SRG_BODE_PROFILE', 'default')
    return config.get(name, Config)
