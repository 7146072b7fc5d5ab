"""Impedance-tuned microwave loop toolkit.

Models the full chain from the drive electronics to the spin readout:
phase-shifter impedance tuning and loop current (`rf_network`), field
and Rabi-frequency maps plus loop inductance (`magnetics`), two-level
spin protocols including synchronized AC detection (`spin_dynamics`),
and spectral readout (`signal_analysis`).  The `cli` module ties these
into reproducible scenario runs.
"""

from . import cli, config, magnetics, rf_network, signal_analysis, spin_dynamics
from .errors import (
    CalibrationError,
    ClearanceError,
    ConfigError,
    FlatObjectiveError,
    ImpedancePoleError,
    NumericalError,
    NvloopError,
    PreconditionError,
    PulseOverlapError,
)

__version__ = "0.1.0"

__all__ = [
    "cli",
    "config",
    "magnetics",
    "rf_network",
    "signal_analysis",
    "spin_dynamics",
    "NvloopError",
    "ConfigError",
    "PreconditionError",
    "PulseOverlapError",
    "NumericalError",
    "ImpedancePoleError",
    "FlatObjectiveError",
    "ClearanceError",
    "CalibrationError",
    "__version__",
]
