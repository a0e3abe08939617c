"""Orbital integrals over chains of subgroups acting on measure spaces."""
from . import actions, averaging, diagnostics, groups, martingale, measures
from .errors import (ConfigError, DomainError, EmptyIntersection, MismatchedGroups, NotAFundamentalDomain,
                     OrbintError, PointNotInRegion, QuadratureFailure, SingularHit, TruncationTooSmall,
                     UnsupportedLevel, ZeroHitting)

__version__ = "0.1.0"

__all__ = [
    "actions", "averaging", "diagnostics", "groups", "martingale", "measures",
    "ConfigError", "DomainError", "EmptyIntersection", "MismatchedGroups", "NotAFundamentalDomain",
    "OrbintError", "PointNotInRegion", "QuadratureFailure", "SingularHit", "TruncationTooSmall",
    "UnsupportedLevel", "ZeroHitting",
]
