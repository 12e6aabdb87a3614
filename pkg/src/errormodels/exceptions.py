"""Exception hierarchy shared across the package."""


class ErrorModelsError(Exception):
    """Base class for all package errors."""


class ShapeError(ErrorModelsError, ValueError):
    """Array dimensions do not match the declared contract."""


class DiscretizationError(ErrorModelsError, ValueError):
    """Invalid spatial discretization requested."""


class MissingHistoryError(ErrorModelsError, ValueError):
    """Multistep residual evaluated without the required past states."""


class SolverDivergenceError(ErrorModelsError, RuntimeError):
    """Newton iteration failed to reach the residual tolerance."""

    def __init__(self, message, residual_norm=float("nan"), mu=None):
        super().__init__(message)
        self.residual_norm = residual_norm
        self.mu = mu


class RankDeficiencyError(ErrorModelsError, ValueError):
    """Requested basis dimension exceeds the numerical rank."""


class DegenerateSpectrumError(ErrorModelsError, ValueError):
    """All singular values vanish."""


class UnderSamplingError(ErrorModelsError, ValueError):
    """Fewer sample indices than basis vectors."""


class ConditioningError(ErrorModelsError, ValueError):
    """A linear system is too ill conditioned to be solved reliably."""


class MissingInputError(ErrorModelsError, ValueError):
    """A required input (e.g. a residual) was not provided."""


class EmptyTrainingError(ErrorModelsError, ValueError):
    """An estimator was asked to fit on an empty collection."""


class EmptyTestError(ErrorModelsError, ValueError):
    """An evaluation was asked to run on an empty collection."""


class DomainError(ErrorModelsError, ValueError):
    """Invalid parameter domain."""


class CardinalityError(ErrorModelsError, ValueError):
    """Not enough parameter instances for the requested split."""


class ConfigurationError(ErrorModelsError, ValueError):
    """Incompatible combination of options."""


class WrongEntryPointError(ConfigurationError):
    """Model family must be evaluated through its dedicated function."""


class TrainingFailureError(ErrorModelsError, RuntimeError):
    """Every training attempt produced a non-finite loss."""


class UndefinedEstimateError(ErrorModelsError, ValueError):
    """An estimator's denominator vanishes."""


class DegenerateVarianceError(ErrorModelsError, ValueError):
    """The reference data has zero total variance."""


class InadmissibleBoundError(ErrorModelsError, ValueError):
    """The time step violates the error-bound hypothesis."""


class CompatibilityError(ErrorModelsError, ValueError):
    """A model and a dataset were built with different feature kinds."""
