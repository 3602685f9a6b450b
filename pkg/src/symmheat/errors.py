"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ConfigError(ValueError):
    """Invalid scenario configuration.

    ``field`` names the offending entry (dotted path) when known.
    """

    def __init__(self, message, field=None):
        self.field = field
        if field:
            message = f"{field}: {message}"
        super().__init__(message)


class ExpressionError(ConfigError):
    """Syntax or evaluation error in a source expression."""


class SolverError(RuntimeError):
    """A linear or time-stepping solve failed."""
