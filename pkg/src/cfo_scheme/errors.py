"""Exception types raised across the package."""


class CfoError(ValueError):
    """Base class for all errors raised by cfo_scheme."""


class InsufficientSamples(CfoError):
    pass


class ZeroPowerSignal(CfoError):
    pass


class ZeroInput(CfoError):
    pass


class ZeroCorrelation(CfoError):
    pass


class LengthMismatch(CfoError):
    pass


class MissingPilots(CfoError):
    pass


class DomainError(CfoError):
    pass


class StageDisabled(CfoError):
    pass


class TooFewSamples(CfoError):
    pass
