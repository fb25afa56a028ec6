"""Exception hierarchy shared by every lobrnn module."""


class LobError(Exception):
    """Base class for all lobrnn errors."""


# -- market data ----------------------------------------------------------

class MalformedRecord(LobError, ValueError):
    def __init__(self, line: int, field: str, message: str):
        self.line = line
        self.field = field
        super().__init__(f"line {line}, field {field!r}: {message}")


class NonMonotoneTimestamp(LobError, ValueError):
    def __init__(self, line: int, ts: int, previous: int):
        self.line = line
        super().__init__(f"line {line}: timestamp {ts} precedes {previous}")


class BookError(LobError):
    """An event cannot be applied to the current book."""


class CancelExceedsDepth(BookError):
    pass


class MarketOrderExceedsVisibleDepth(BookError):
    pass


class CrossedBook(BookError):
    pass


class EmptySide(BookError):
    pass


# -- simulator / features / dataset --------------------------------------

class InvalidConfig(LobError, ValueError):
    pass


class InsufficientRows(LobError, ValueError):
    pass


class HorizonBeyondSession(LobError):
    pass


class MissingClass(LobError, ValueError):
    pass


class InsufficientSessions(LobError, ValueError):
    pass


# -- models ---------------------------------------------------------------

class NonFiniteInput(LobError, ValueError):
    pass


class DimensionMismatch(LobError, ValueError):
    pass


class DivergedLoss(LobError, ArithmeticError):
    def __init__(self, message: str, history=None):
        self.history = history
        super().__init__(message)


class ModelFormatError(LobError, ValueError):
    """Model file is unreadable, truncated or structurally invalid."""


class VersionMismatch(ModelFormatError):
    pass


class LayoutHashMismatch(ModelFormatError):
    pass


# -- cli ------------------------------------------------------------------

class ManifestMismatch(LobError):
    pass
