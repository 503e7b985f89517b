"""Exception types raised by the library."""


class ConfigError(ValueError):
    """Invalid or malformed run configuration.

    ``key`` names the offending configuration entry when one is known.
    """

    def __init__(self, message, key=None):
        if key is not None and key not in message:
            message = f"{key}: {message}"
        super().__init__(message)
        self.key = key


class NumericalError(ArithmeticError):
    """A numerical routine could not produce a trustworthy result."""


class NoNullSpaceError(NumericalError):
    pass


class DegenerateSteadyStateError(NumericalError):
    pass


class ImpossibleTrajectoryError(NumericalError):
    """The trajectory has zero probability under the model."""


class PreconditionError(ValueError):
    """An operation was called outside the regime where it is defined."""
