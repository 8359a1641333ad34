"""Exception hierarchy shared by every module.

Each class carries the CLI exit code it maps to.
"""


class UniPersError(Exception):
    exit_code = 1


class ConfigError(UniPersError, ValueError):
    exit_code = 2


class ParameterError(UniPersError, ValueError):
    """Invalid model or function parameters."""
    exit_code = 2


class InputError(UniPersError, ValueError):
    """Malformed or insufficient input data."""
    exit_code = 3


class DegeneracyError(InputError):
    exit_code = 3


class StructuralError(InputError):
    """A filtration violates face-order compatibility."""
    exit_code = 3


class UnsupportedDegreeError(UniPersError, ValueError):
    exit_code = 2


class InfiniteCycleError(UniPersError, ValueError):
    exit_code = 3


class DomainError(UniPersError, ValueError):
    exit_code = 4


class InsufficientDataError(InputError):
    exit_code = 3


class IntegrationError(UniPersError, ArithmeticError):
    exit_code = 4


class NonTerminationError(UniPersError, RuntimeError):
    exit_code = 4
