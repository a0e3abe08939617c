"""Exception hierarchy shared by every orbint module."""


class OrbintError(Exception):
    """Base class for all orbint errors."""


class MismatchedGroups(OrbintError):
    pass


class DomainError(OrbintError, ValueError):
    pass


class TruncationTooSmall(OrbintError):
    pass


class UnsupportedLevel(OrbintError):
    pass


class QuadratureFailure(OrbintError, ArithmeticError):
    """Raised when a quadrature produces NaN or overflows."""


class SingularHit(OrbintError, ArithmeticError):
    """An orbit point landed exactly on a singularity of the integrand."""


class ZeroHitting(OrbintError, ZeroDivisionError):
    pass


class NotAFundamentalDomain(OrbintError):
    pass


class EmptyIntersection(OrbintError):
    pass


class PointNotInRegion(OrbintError, KeyError):
    pass


class ConfigError(OrbintError):
    pass
