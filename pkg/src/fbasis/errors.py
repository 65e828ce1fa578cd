"""Exception hierarchy shared by every module of the package."""

from __future__ import annotations


class FBasisError(Exception):
    """Base class for all package errors."""


class SingularParameter(FBasisError):
    """A generator hit a denominator (or hypersurface coefficient) below the singularity screen."""


class RankMismatch(FBasisError):
    pass


class MissingEntry(FBasisError):
    pass


class MalformedDocument(FBasisError):
    pass


class UnknownPair(FBasisError, KeyError):
    pass


class UnknownKind(FBasisError, KeyError):
    pass


class IndexOutOfRange(FBasisError, IndexError):
    pass


class NotABijection(FBasisError, ValueError):
    pass


class DimensionMismatch(FBasisError, ValueError):
    pass


class InsufficientRapidities(FBasisError):
    pass


class BranchCut(FBasisError):
    """A square root was requested on (or within tolerance of) the negative real axis."""


class SingularDiagonal(FBasisError):
    pass


class DivisionNearZero(FBasisError, ZeroDivisionError):
    """A weight entering a denominator is smaller than the singularity screen.

    The offending weight is named in the message so that callers can resample.
    """


class ConfigError(FBasisError):
    pass
