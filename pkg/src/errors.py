"""
All errors raised by the library.

Errors about malformed input also derive from `ValueError`,
errors about a negative or undecided answer derive from `VerdictError`.
"""


class AnosovError(Exception):
    pass


# --- input ---

class InvalidInput(AnosovError, ValueError):
    pass


class InvalidConfig(InvalidInput):
    pass


class DimensionMismatch(InvalidInput):
    pass


class InvalidRepresentation(InvalidInput):
    pass


class InvalidCone(InvalidInput):
    pass


class SignatureMismatch(InvalidInput):
    pass


class IndexMismatch(InvalidInput):
    pass


class AutomatonMismatch(InvalidInput):
    pass


class UnsupportedFamily(InvalidInput):
    pass


class NotTransverse(InvalidInput):
    pass


class NotGraph(InvalidInput):
    pass


class NotPositiveOnChamber(InvalidInput):
    pass


class TooShort(InvalidInput):
    pass


class EmptyRecurrentPart(InvalidInput):
    pass


# --- numerics ---

class NumericalError(AnosovError):
    pass


class NonInvertible(NumericalError):
    pass


class NoGap(NumericalError):
    pass


class NoGapAtTheta(NoGap):
    pass


class DidNotConverge(NumericalError):

    def __init__(self, message: str, residual: float = float("nan"), depth: int = 0):
        super().__init__(message)
        self.residual = residual
        self.depth = depth


class BallTooLarge(AnosovError):

    def __init__(self, message: str, projected_size: int = 0):
        super().__init__(message)
        self.projected_size = projected_size


# --- verdicts ---

class VerdictError(AnosovError):
    pass


class NotDominated(VerdictError):
    pass


class NotDominatedInput(VerdictError):
    pass


class NotCertified(VerdictError):
    pass


class NotRegular(VerdictError):
    pass


class NotQuasiGeodesic(VerdictError):
    pass


class NotStabilized(VerdictError):
    pass


class NoCandidateCertified(VerdictError):

    def __init__(self, message: str, margins=None):
        super().__init__(message)
        self.margins = margins


class InternalConsistencyError(AssertionError):
    pass
