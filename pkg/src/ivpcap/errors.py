"""Exception hierarchy shared by all modules."""


class IvpcapError(Exception):
    """Base class for every error raised by this package."""


class InvalidSpec(IvpcapError, ValueError):
    pass


class InvalidBase(InvalidSpec):
    pass


class NotIntegerValued(IvpcapError, ValueError):
    pass


class PoleAtOne(IvpcapError, ZeroDivisionError):
    pass


class QuadratureNotConverged(IvpcapError, ArithmeticError):
    pass


class NotPositiveDefinite(IvpcapError, ArithmeticError):
    """A Cholesky pivot fell below the truncation/rounding guard.

    Retry with a higher working precision or a smaller truncation tolerance.
    """


class DisksOverlap(IvpcapError, ValueError):
    pass


class NomeOutOfRange(IvpcapError, ValueError):
    pass


class NoBracket(IvpcapError, ArithmeticError):
    pass


class DimensionCap(IvpcapError):
    pass


class EnclosureTooLoose(IvpcapError):
    pass
