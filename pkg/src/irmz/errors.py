"""Exception types raised across the package."""


class IrmzError(Exception):
    """Base class for all package errors."""


class CapExceeded(IrmzError):
    pass


class OddTotal(IrmzError, ValueError):
    pass


class TruncationOverflow(IrmzError):
    pass


class NotPSD(IrmzError, ValueError):
    pass


class BadTrace(IrmzError, ValueError):
    pass


class BadEfficiency(IrmzError, ValueError):
    pass


class NotTracePreserving(IrmzError, ValueError):
    pass


class NotPositive(IrmzError, ValueError):
    pass


class ChoiNotPSD(IrmzError, ValueError):
    pass


class TruncationMismatch(IrmzError, ValueError):
    pass


class NoParticles(IrmzError, ValueError):
    """Sensitivity is undefined when no particles reach the interferometer."""


class DegenerateSignal(IrmzError):
    """The signal carries no phase information (flat mean)."""


class BadMoments(IrmzError, ValueError):
    pass


class NotPure(IrmzError, ValueError):
    pass


class NonMonotone(IrmzError):
    pass
