"""Exception types shared across the package."""


class ExodssError(Exception):
    """Base class for all package errors."""


# --- geometry / configuration ---------------------------------------------

class InvalidGrid(ExodssError):
    pass


class UnknownNode(ExodssError):
    pass


class SupportNodeImmutable(ExodssError):
    pass


# --- structural solver ------------------------------------------------------

class SingularSystem(ExodssError):
    """The reduced stiffness system has a mechanism or insufficient supports."""


class NonFinite(ExodssError):
    """The solution overflowed or produced NaN/inf."""


# --- fabrication -------------------------------------------------------------

class NonPositiveReference(ExodssError):
    pass


# --- protocol / session ------------------------------------------------------

class DecodeError(ExodssError):
    """A wire frame failed to decode. Carries a reason and, where known,
    the byte offset of the failure within the frame."""

    def __init__(self, reason: str, offset: int | None = None):
        super().__init__(reason if offset is None else f"{reason} (at byte {offset})")
        self.reason = reason
        self.offset = offset


class ProtocolError(ExodssError):
    """A well-formed message that is invalid in the current session state."""

    def __init__(self, code: str, detail: str = ""):
        super().__init__(f"{code}: {detail}" if detail else code)
        self.code = code
        self.detail = detail


class ClockRegression(ExodssError):
    pass


class ConnectionLost(ExodssError):
    pass


# --- analytics ---------------------------------------------------------------

class EmptySample(ExodssError):
    pass


class AllZeroDifferences(ExodssError):
    pass


class TooFewPoints(ExodssError):
    pass


class MissingPhase(ExodssError):
    pass


class OutOfRangeItem(ExodssError):
    pass


class NoPoseData(ExodssError):
    pass
