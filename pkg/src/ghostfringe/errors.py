"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: ConfigError -> 2, InputDataError -> 3,
NumericValidityError -> 4.
"""


class GhostFringeError(Exception):
    """Base class for all package errors."""


class ConfigError(GhostFringeError):
    """Invalid, missing or unknown configuration keys."""


class InputDataError(GhostFringeError):
    """Malformed or empty input data files."""


class NumericValidityError(GhostFringeError):
    """A numerical precondition of an operation is violated."""


class GridResolutionError(NumericValidityError):
    """Grid too coarse to resolve an aperture feature."""


class SamplingBoundError(NumericValidityError):
    """Fresnel sampling bound violated.

    Carries the maximum admissible grid spacing in ``bound`` (meters).
    """

    def __init__(self, message: str, bound: float):
        super().__init__(message)
        self.bound = bound


class GridMismatchError(NumericValidityError):
    """Two objects that must share a grid do not."""


class BroadbandLimitError(NumericValidityError):
    """A broadband (zero correlation length) closed form was called with
    a finite correlation length; use the quadrature variant instead."""


class ArmSymmetryError(NumericValidityError):
    """A symmetric-arms closed form was called with asymmetric arms; use
    the quadrature variant instead."""


class UndefinedCorrelationError(NumericValidityError):
    """Normalized correlation undefined (zero mean intensity)."""


class RankDeficiencyError(NumericValidityError):
    """Normal equations singular during fitting.

    ``parameter`` names the degenerate model parameter.
    """

    def __init__(self, message: str, parameter: str):
        super().__init__(message)
        self.parameter = parameter
