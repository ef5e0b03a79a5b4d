"""
Exception hierarchy for SRG Bode
Library code raises these; only the command line turns them into exit codes
"""

from typing import Optional


class SrgBodeError(Exception):
    """Base class for every error raised by the toolkit"""

    exit_status = 1


class ConfigError(SrgBodeError):
    """Run configuration is malformed, incomplete or inconsistent"""

    exit_status = 1


class PreconditionError(SrgBodeError, ValueError):
    """An operation was called with arguments outside its domain"""


class PoleOnAxisError(PreconditionError):
    """Transfer function denominator vanishes on the imaginary axis"""

    def __init__(self, omega: float):
        super().__init__(f"denominator vanishes at s = j*{omega:g} (pole on the imaginary axis)")
        self.omega = omega


class MissingBoundsError(SrgBodeError):
    """A custom nonlinearity was used without slope/sector bound functions"""


class CertificationError(SrgBodeError):
    """A hypothesis of the gain certificate does not hold"""

    exit_status = 2

    def __init__(self, hypothesis: str, message: str, tau: Optional[float] = None):
        detail = f"{hypothesis}: {message}"
        if tau is not None:
            detail += f" (tau = {tau:.6g})"
        super().__init__(detail)
        self.hypothesis = hypothesis
        self.tau = tau


class SimulationDivergedError(SrgBodeError):
    """Time-domain simulation left the bounded region"""

    def __init__(self, time: float, state_norm: float):
        super().__init__(f"state norm {state_norm:.3g} exceeded the divergence limit at t = {time:.6g}")
        self.time = time
        self.state_norm = state_norm


class HypothesisError(CertificationError, PreconditionError):
    """A structural hypothesis (stability, strict properness, oddness, bounds) fails"""
