"""Exception hierarchy.

Construction-time mistakes (a bad write, a double open, an ill-formed
history) raise immediately.  Runtime checker failures raise
:class:`CheckViolation`, which the interpreter turns into a ``Violation``
outcome carrying the replay tape.
"""

from __future__ import annotations


class SteelsimError(Exception):
    pass


class PcmError(SteelsimError):
    """Partial operation applied outside its domain."""


class DomainError(PcmError):
    pass


class UndecidableError(SteelsimError):
    """No PCM-specific procedure and no finite carrier to enumerate."""


class ResourceCapError(SteelsimError):
    pass


class HistoryError(SteelsimError):
    pass


class FragmentError(SteelsimError):
    """Assertion outside the checkable fragment."""


class ConstructionError(SteelsimError):
    """An action or tree was rejected when built (before any execution)."""


class DoubleOpenError(ConstructionError):
    pass


class CompositionError(ConstructionError):
    pass


class TapeExhausted(SteelsimError):
    """A finite tape ran out at a branch point."""


class CheckViolation(SteelsimError):
    """A runtime check failed.

    ``kind`` is a short stable tag (``"footprint"``, ``"preorder"``,
    ``"invariant-restoration"``, ``"ghost"``, ...).
    """

    def __init__(self, kind: str, message: str) -> None:
        super().__init__(f"{kind}: {message}")
        self.kind = kind
        self.message = message
