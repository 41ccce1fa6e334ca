"""Exception hierarchy. Each class carries the CLI exit code for its category."""


class GaugeflowError(Exception):
    exit_code = 1


class DomainError(GaugeflowError):
    """A point left the chart on which a potential or internal space is defined."""

    exit_code = 3

    def __init__(self, message, time=None):
        if time is not None:
            message = f"{message} (t = {time:.17g})"
        super().__init__(message)
        self.time = time


class NumericError(GaugeflowError):
    """Singular matrices, non-convergent iterations, step-size underflow."""

    exit_code = 4


class GeometryError(NumericError):
    """Degenerate triangulations or caps that do not bound their loop."""


class ConfigError(GaugeflowError):
    exit_code = 2
    category = "config"

    def __init__(self, message, line=None, column=None, key=None):
        self.line = line
        self.column = column
        self.key = key
        where = ""
        if line is not None:
            where = f"line {line}" + (f", column {column}" if column is not None else "")
            where += ": "
        super().__init__(f"{self.category} error: {where}{message}")


class ConfigSyntaxError(ConfigError):
    category = "syntax"


class UnknownKeyError(ConfigError):
    category = "unknown-key"


class ConfigInvariantError(ConfigError):
    category = "invariant"
