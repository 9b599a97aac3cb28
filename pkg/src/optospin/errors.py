"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Bad or incomplete parameter file."""


class NumericalError(RuntimeError):
    """Base class for failures inside a numerical routine."""


class StepSizeError(NumericalError):
    pass


class CurveError(NumericalError):
    """A curve has no usable extremum or half-maximum crossing."""


class UnreachableError(NumericalError):
    """Requested target lies outside the range a map can produce."""


class FitError(NumericalError):
    pass
