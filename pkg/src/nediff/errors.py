"""Exception taxonomy shared across the package."""


class DomainError(ValueError):
    """A physical or mathematical argument is outside its valid domain."""


class ConfigurationError(ValueError):
    """A grid, scenario or run description is inconsistent or insufficient."""


class StateError(RuntimeError):
    """An object was used before a required preparation step (e.g. calibration)."""


class UnsupportedPathError(RuntimeError):
    """The requested computation path does not apply to these inputs."""


class AnalysisError(RuntimeError):
    """An observable could not be extracted from the data (e.g. too few peaks)."""


class NumericalError(RuntimeError):
    """A numerical routine failed to reach the requested accuracy.

    Carries the achieved error estimate so callers can decide whether the
    partial result is still usable.
    """

    def __init__(self, message, achieved=None, partial=None):
        super().__init__(message)
        self.achieved = achieved
        self.partial = partial
