"""Exception hierarchy shared across the package."""

from __future__ import annotations


class BeliefscopeError(Exception):
    """Base class for all library errors."""


class SpecSyntaxError(BeliefscopeError):
    """Malformed model/scene/stream document; carries a text position when known."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)


class RuleSyntaxError(SpecSyntaxError):
    """Malformed rule text; ``position`` is the character offset of the offending token."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class InvalidNetworkError(BeliefscopeError):
    """Structural or numerical invariants failed; carries every diagnostic, not just the first."""

    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(self.diagnostics))


class EvidenceError(BeliefscopeError):
    """Evidence refers to an unknown node or an unknown state label."""


class ImpossibleEvidenceError(BeliefscopeError):
    """The observed evidence has probability zero under the model."""

    def __init__(self, node: str | None, message: str | None = None):
        self.node = node
        if message is None:
            where = f" at node '{node}'" if node is not None else ""
            message = f"impossible evidence: support vanished{where}"
        super().__init__(message)


class StateSpaceCapError(BeliefscopeError):
    """The joint state space exceeds the enumeration cap."""


class StreamValidationError(BeliefscopeError):
    """A frame stream violates its ordering or timing invariants."""


class FrameInferenceError(BeliefscopeError):
    """Wraps an inference error with the index of the frame where it occurred."""

    def __init__(self, index: int, cause: BeliefscopeError):
        self.index = index
        self.cause = cause
        super().__init__(f"frame {index}: {cause}")
