"""Exception types raised by the simulator."""


class InvalidArgument(ValueError):
    """A numeric argument is outside the domain of an operation."""


class PreconditionViolation(ValueError):
    """Input data violates an admissibility condition (e.g. phi0 outside [0, 1])."""


class DivergenceError(RuntimeError):
    """The time integration produced non-finite values."""

    def __init__(self, message, time=None):
        super().__init__(message if time is None else f"{message} (t = {time!r})")
        self.time = time


class SingularTemperatureError(DivergenceError):
    """Absolute temperature reached a non-positive value."""


class ConfigError(ValueError):
    """One or more problems found while reading a run configuration.

    ``errors`` holds one ``"section.key: message"`` string per problem.
    """

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))
