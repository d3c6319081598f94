"""Exception hierarchy shared across the package."""


class HpercError(Exception):
    """Base class for all package errors."""


class InvalidDimensionError(HpercError, ValueError):
    pass


class InvalidEnsembleError(HpercError, ValueError):
    pass


class InvalidPairError(HpercError, ValueError):
    pass


class InvalidThresholdError(HpercError, ValueError):
    pass


class InvalidArgumentError(HpercError, ValueError):
    pass


class InvalidDataError(HpercError, ValueError):
    """Fit input contains values the model cannot represent (e.g. ΔS <= 0)."""


class InsufficientDataError(HpercError, ValueError):
    pass


class FitError(HpercError, RuntimeError):
    pass


class DegenerateFitError(FitError):
    """The data do not identify every parameter of the model."""


class ResourceLimitError(HpercError, RuntimeError):
    """A configuration would exceed the memory budget."""


class NoCriticalThresholdError(HpercError, RuntimeError):
    """The MSC indicator is false even at the largest admissible threshold."""
