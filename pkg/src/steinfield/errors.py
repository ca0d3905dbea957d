"""Exception types shared across the package."""


class NumericalError(RuntimeError):
    """A numerical procedure failed (factorization, truncation, quadrature)."""


class RegimeError(ValueError):
    """Inputs lie outside the regime in which a bound expression is defined."""


class ConfigError(ValueError):
    """An experiment configuration is malformed.

    ``line`` is the 1-based line of the offending entry when known.
    """

    def __init__(self, message: str, line=None, path=None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where = f"{path}:{line}: " if line is not None else f"{path}: "
        elif line is not None:
            where = f"line {line}: "
        super().__init__(where + message)
