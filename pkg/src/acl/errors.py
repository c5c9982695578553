"""Exception hierarchy.

Every error raised on purpose by this package derives from :class:`AclError`,
which itself is a ``ValueError`` so generic callers can catch bad input the
usual way.
"""


class AclError(ValueError):
    """Base class for all domain errors."""


class NotSquare(AclError):
    pass


class NotHermitian(AclError):
    pass


class NotPsd(AclError):
    pass


class DimensionMismatch(AclError):
    pass


class SpectralGapTooSmall(AclError):
    """An eigenvalue sits too close to 1/2 for rounding to be well defined."""


class NotPovm(AclError):
    pass


class SingularSum(AclError):
    pass


class InvalidOutcomeCount(AclError):
    pass


class InvalidSize(AclError):
    pass


class NotNearProjective(AclError):
    pass


class RoundingFailed(AclError):
    pass


class NotUnitary(AclError):
    pass


class NotContraction(AclError):
    pass


class CommutatorBudgetExceeded(AclError):
    pass


class UnsupportedFamilySize(AclError):
    pass


class BadTorus(AclError):
    pass


class InconsistentResult(AclError):
    """Stored diagnostics disagree with a from-scratch recomputation."""


class Infeasible(AclError):
    """No witness satisfying the commutator budget was found."""
