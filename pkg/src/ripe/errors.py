"""Exception hierarchy.

Two families matter to callers: :class:`DataError` (bad or inconsistent
input, CLI exit code 3) and :class:`NumericalError` (the computation itself
failed, exit code 4).
"""


class RipeError(Exception):
    """Base class for all errors raised by this package."""


class DataError(RipeError, ValueError):
    pass


class NumericalError(RipeError, ArithmeticError):
    pass


class ParseError(DataError):
    def __init__(self, path, line, message):
        self.path = str(path)
        self.line = line
        super().__init__(f"{self.path}:{line}: {message}")


class CycleDetected(DataError):
    pass


class NotStronglyConnected(DataError):
    pass


class EmptyComponentSet(DataError):
    pass


class LengthMismatch(DataError):
    pass


class MissingWildType(DataError):
    pass


class InsufficientReplicates(DataError):
    pass


class ValueOutOfRange(DataError):
    pass


class InfeasibleTarget(DataError):
    pass


class InvalidPosition(DataError):
    pass


class NodeNotInOrdering(DataError):
    pass


class EmptyInput(DataError):
    pass


class GeneSetMismatch(DataError):
    pass


class LabelMismatch(DataError):
    pass


class EdgeBudgetTooLarge(DataError):
    pass


class SingularSystem(NumericalError):
    pass


class NonConvergence(NumericalError):
    pass
