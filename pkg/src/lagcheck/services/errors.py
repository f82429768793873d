class LagCheckError(Exception):
    """Base class for every domain failure raised by lagcheck."""


class NotSymmetric(LagCheckError):
    pass


class NotPositiveDefinite(LagCheckError):
    pass


class InvalidHistory(LagCheckError):
    pass


class InvalidLags(LagCheckError):
    pass


class OrderOutOfRange(LagCheckError):
    pass


class ConvergenceFailure(LagCheckError):
    pass


class QuadratureFailure(LagCheckError):
    pass


class TruncationFailure(LagCheckError):
    pass


class InstabilityDetected(LagCheckError):
    pass


class StepTooLarge(LagCheckError):
    pass
