"""Exception hierarchy shared by all nvloop modules.

Two broad families matter to callers: configuration / contract errors
(bad parameter values, violated preconditions) and numerical errors
(impedance poles, conductor clearance, failed calibrations).  The CLI
maps the first family to exit code 2 and the second to exit code 3.
"""


class NvloopError(Exception):
    """Base class for all nvloop errors."""


class ConfigError(NvloopError):
    """Malformed config file or invalid parameter value."""


class PreconditionError(NvloopError, ValueError):
    """An operation was called outside its documented contract."""


class PulseOverlapError(PreconditionError):
    """Pulses overlap: the drive is too slow for the requested spacing."""


class NumericalError(NvloopError, ArithmeticError):
    """A computation hit a documented singular or degenerate point."""


class ImpedancePoleError(NumericalError):
    """The requested impedance diverges (open line at a cot pole)."""


class FlatObjectiveError(NumericalError):
    """|Zin| does not vary over the phase scan; no optimum exists."""


class ClearanceError(NumericalError):
    """A field evaluation point lies too close to a conductor filament."""


class CalibrationError(NumericalError):
    """A calibration target could not be bracketed in the search range."""
