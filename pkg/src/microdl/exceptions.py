"""Exception hierarchy. The CLI maps each family to an exit code."""


class MicroDLError(Exception):
    exit_code = 1


class ConfigError(MicroDLError, ValueError):
    """Bad configuration or parameter value."""

    exit_code = 2


class ParameterError(ConfigError):
    pass


class DataError(MicroDLError, ValueError):
    """Input data violates a precondition (shape, labels, parse failure)."""

    exit_code = 3


class DimensionError(DataError):
    pass


class KindError(MicroDLError, TypeError):
    """Operation not defined for this visible-unit kind."""

    exit_code = 2


class NumericError(MicroDLError, ArithmeticError):
    exit_code = 4
