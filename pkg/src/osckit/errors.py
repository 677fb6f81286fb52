"""Exception types shared across the package."""


class OsckitError(Exception):
    """Base class for all package-specific errors."""


class ParseError(OsckitError):
    """Raised by the expression parser; carries position and expected tokens."""

    def __init__(self, message, position, expected=()):
        self.position = position
        self.expected = tuple(expected)
        detail = f"{message} at position {position}"
        if self.expected:
            detail += " (expected: " + ", ".join(self.expected) + ")"
        super().__init__(detail)


class EvaluationError(OsckitError):
    """An expression hit a domain-error sentinel during validation."""


class DivergentTail(OsckitError):
    """An improper integral did not converge before the hard horizon cap."""


class WeightTailMismatch(OsckitError):
    """A user-supplied closed-form tail disagrees with quadrature."""


class InvalidWeight(OsckitError):
    """Weight unsuitable for the requested transform."""


class WeightVanishes(OsckitError):
    """Weight evaluated to a non-positive value inside its domain."""


class BracketFailure(OsckitError):
    """Root bracketing failed within the horizon cap."""


class NegativeShiftedPotential(OsckitError):
    """A shifted potential went below -tolerance on the verification grid."""


class LadderStall(OsckitError):
    """Iterated weight refinement hit a divergent tail."""


class FamilyMismatch(OsckitError):
    """Lower-bound evidence for the selected comparison family failed."""


class InvalidRange(OsckitError):
    """Interval endpoints out of order."""


class EnvelopeViolated(OsckitError):
    """No positive constant fits the requested growth envelope."""


class Overflow(OsckitError):
    """Value exceeds floating range; use the log-scaled variant."""
