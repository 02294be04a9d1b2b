"""Exception hierarchy.

Every error raised by the package derives from :class:`CombTomoError`. Input
problems also derive from :class:`ValueError` so generic callers can catch
them without importing this module.
"""


class CombTomoError(Exception):
    """Base class for all package errors."""


class InputError(CombTomoError, ValueError):
    """Malformed or inconsistent input."""


class NotSquare(InputError):
    pass


class NotHermitian(InputError):
    pass


class NotPSD(InputError):
    pass


class NotUnitary(InputError):
    pass


class NotSkewHermitian(InputError):
    pass


class NotCP(InputError):
    pass


class ShapeMismatch(InputError):
    pass


class DimensionMismatch(InputError):
    pass


class BadSubsystemIndex(InputError):
    pass


class EmptyInput(InputError):
    pass


class BadShape(InputError):
    pass


class BadIndex(InputError):
    pass


class BadRank(InputError):
    pass


class BadPurity(InputError):
    pass


class BadDesign(InputError):
    pass


class Misalignment(InputError):
    pass


class InfeasibleConstraints(InputError):
    pass


class RankDeficient(CombTomoError):
    """Numerical rank of a matrix is below what the operation needs."""


class RankDeficientDesign(CombTomoError):
    """Experiment design cannot reach the required number of independent temporary states."""

    def __init__(self, message, step=None, rank=None, target=None):
        super().__init__(message)
        self.step = step
        self.rank = rank
        self.target = target


class Singular(CombTomoError):
    pass


class CombTooLarge(CombTomoError, MemoryError):
    """Choi matrix would exceed the configured dimension cap."""


class CallbackFailure(CombTomoError):
    """The cost/gradient callback raised or returned something unusable."""
