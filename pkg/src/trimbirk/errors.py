"""Error hierarchy shared by every module.

Each class carries the process exit code the CLI maps it to.
"""


class TrimbirkError(Exception):
    exit_code = 2


class DomainError(TrimbirkError, ValueError):
    """Input outside the mathematical domain of an operation."""


class ValidationError(TrimbirkError, ValueError):
    """Malformed or non-canonical input."""


class LengthError(TrimbirkError):
    """A finite digit stream was asked for more digits than it has."""


class RangeError(TrimbirkError):
    """A request exceeds the certified range of a rotation context."""


class PreconditionError(TrimbirkError):
    """A structural hypothesis of a check or construction does not hold."""


class ConstructionError(TrimbirkError):
    """No digit satisfies the requested growth constraint."""


class BudgetError(TrimbirkError):
    exit_code = 3
