"""Exception hierarchy shared by all modules."""

from __future__ import annotations


class SwitchVerdictError(Exception):
    """Base class for every error raised by this package."""


# numerical kernel

class NotSymmetric(SwitchVerdictError, ValueError):
    pass


class NotSpd(SwitchVerdictError, ValueError):
    pass


class SingularLyapunov(SwitchVerdictError, ArithmeticError):
    pass


class NoConvergence(SwitchVerdictError, ArithmeticError):
    pass


class ExpmOverflow(SwitchVerdictError, OverflowError):
    pass


# certificates

class InvalidFamily(SwitchVerdictError, ValueError):
    pass


class Boundary(SwitchVerdictError, ValueError):
    """Spectral abscissa too close to zero to call the matrix Hurwitz or not."""


class EpsilonSearchFailed(SwitchVerdictError, ArithmeticError):
    pass


class CertificateError(SwitchVerdictError):
    """A constituent failure while building a certificate set.

    ``subsystem`` or ``edge`` names the offending item; the original error is
    chained as ``__cause__``.
    """

    def __init__(self, message: str, subsystem: int | None = None,
                 edge: tuple[int, int] | None = None):
        super().__init__(message)
        self.subsystem = subsystem
        self.edge = edge


# switching signals

class InvalidSignal(SwitchVerdictError, ValueError):
    pass


class UnknownMode(SwitchVerdictError, ValueError):
    pass


class InadmissibleTransition(SwitchVerdictError, ValueError):
    def __init__(self, index: int, p: int, q: int):
        super().__init__(f"transition {p}->{q} at switch #{index} is not in E(P)")
        self.index = index
        self.p = p
        self.q = q


class NonpositiveTime(SwitchVerdictError, ValueError):
    pass


class NotEulerian(SwitchVerdictError, ValueError):
    def __init__(self, message: str, degrees: dict[int, tuple[int, int]] | None = None):
        super().__init__(message)
        self.degrees = degrees or {}


class DeadEnd(SwitchVerdictError, ValueError):
    pass


# verdicts and simulation

class MissingEdgeGain(SwitchVerdictError, LookupError):
    pass


class EmptyTail(SwitchVerdictError, ValueError):
    pass


class DimensionMismatch(SwitchVerdictError, ValueError):
    pass


class EnvelopeViolation(SwitchVerdictError, AssertionError):
    def __init__(self, message: str, index: int, t: float):
        super().__init__(message)
        self.index = index
        self.t = t


class TooFewSamples(SwitchVerdictError, ValueError):
    pass


class ConfigError(SwitchVerdictError, ValueError):
    pass
