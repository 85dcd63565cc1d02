"""Exception types raised across the package."""


class CuspLabError(Exception):
    """Base class; the CLI maps these to exit code 3."""


class NotPositiveDefinite(CuspLabError):
    pass


class NotPositiveDefiniteIndex(NotPositiveDefinite):
    pass


class SingularM(CuspLabError):
    pass


class UnsupportedDegree(CuspLabError):
    pass


class IncompatibleShapes(CuspLabError):
    pass


class NonPositiveY(CuspLabError):
    pass


class BadWeight(CuspLabError):
    pass


class OddCharacteristic(CuspLabError):
    pass


class EmptyWindow(CuspLabError):
    pass


class TruncationDominates(CuspLabError):
    pass


class TruncationExceeded(CuspLabError):
    pass


class CutoffInsufficient(CuspLabError):
    pass


class InsufficientGrid(CuspLabError):
    pass


class OutOfRegion(CuspLabError):
    pass


class InconsistentSlice(CuspLabError):
    """Raised when slice entries violate the translation invariance of a Jacobi form."""
