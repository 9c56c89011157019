"""Exception hierarchy for the observer library."""


class VslamError(Exception):
    """Base class for all library errors."""


class DegenerateVector(VslamError, ValueError):
    pass


class SingularMatrix(VslamError, ValueError):
    pass


class LandmarkAtOrigin(VslamError, ValueError):
    """A landmark coincides with the camera centre (class of e4 in body frame)."""


# Same failure seen from the group-action side.
OriginLandmark = LandmarkAtOrigin


class DimensionMismatch(VslamError, ValueError):
    pass


class InvalidState(VslamError, ValueError):
    """A constructed value violates its type invariants."""


class RiccatiBlowup(VslamError, ArithmeticError):
    """A Riccati matrix left the positive-definite cone or diverged."""


class DegenerateReference(VslamError, ValueError):
    pass


class InsufficientHistory(VslamError, ValueError):
    pass


class EmptyHistory(VslamError, ValueError):
    pass


class ParseError(VslamError, ValueError):
    """Malformed configuration text; message carries line/key context."""


class ValidationError(VslamError, ValueError):
    """Configuration parsed but violates a scenario invariant."""
