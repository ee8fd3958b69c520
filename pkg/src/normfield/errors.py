"""Exception types shared across the package."""


class NormfieldError(Exception):
    """Base class for package errors."""


class ConfigError(NormfieldError):
    """Bad or inconsistent run configuration.

    Carries the offending field name so CLI error messages can point at it.
    """

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"config field '{field}': {message}")


class ConditionViolationError(NormfieldError):
    """A structural condition on the nonlinearity fails for the requested op."""

    def __init__(self, condition, message):
        self.condition = condition
        super().__init__(f"[{condition}] {message}")


class TailUndeterminedError(NormfieldError):
    """A tabulated nonlinearity does not determine the asymptotics needed."""


class TruncationError(NormfieldError):
    """An operation would push mass past the grid's outer radius."""

    def __init__(self, message, lost_mass=None):
        self.lost_mass = lost_mass
        super().__init__(message)


class ConvergenceError(NormfieldError):
    """An iterative solve failed to reach its tolerance."""
