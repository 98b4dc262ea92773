"""Exception types raised across the package."""


class InvalidArgumentError(ValueError):
    """An argument violates an operation's precondition."""


class ParseError(ValueError):
    """A dataset, model or results file could not be parsed.

    Carries the file, line and field that failed so the message points at the
    offending row.
    """

    def __init__(
        self,
        message: str,
        path: str | None = None,
        line: int | None = None,
        field: str | None = None,
    ) -> None:
        self.path = path
        self.line = line
        self.field = field
        location = ":".join(str(p) for p in (path, line) if p is not None)
        if field is not None:
            location = f"{location} [{field}]" if location else f"[{field}]"
        super().__init__(f"{location}: {message}" if location else message)


class SingularDataError(ArithmeticError):
    """Training data is degenerate (e.g. all samples identical)."""


class NumericalSingularityError(ArithmeticError):
    """A matrix expected to be positive definite could not be factorized."""


class UnsupportedConfigurationError(ValueError):
    """A model does not have the frame layout a controller requires."""


class ConfigurationError(ValueError):
    """A model and a sweep plan do not fit together."""
