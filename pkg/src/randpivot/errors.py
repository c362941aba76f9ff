"""Exception types raised across the package."""


class RandPivotError(Exception):
    """Base class for all package errors."""


class ParameterError(RandPivotError, ValueError):
    """An argument is outside its admissible domain."""


class DegenerateDataError(RandPivotError):
    """The data carry no variation (e.g. a constant series)."""


class DegenerateVarianceError(RandPivotError):
    """A variance normalizer or studentizer is not strictly positive."""


class IncompleteMomentsError(RandPivotError):
    """Third-order moments required for the skewness functional are missing."""


class NoAdmissibleWindowError(RandPivotError):
    """No admissible window constant reaches the residual tolerance."""


class DenominatorError(RandPivotError):
    """The sum of centered weights vanishes, so the interval is undefined."""


class FitError(RandPivotError):
    """An autoregressive sieve fit failed or is not stationary."""


class EstimationError(RandPivotError):
    """Memory-parameter estimation failed."""


class ConfigError(RandPivotError):
    """An experiment or CLI configuration is invalid."""


class DegenerateStudentizerError(DegenerateVarianceError):
    """A data-driven studentizer is not strictly positive."""


class BudgetExceededError(RandPivotError):
    """An experiment ran past its wall-clock budget."""
