"""Exception types shared across the toolchain."""

from __future__ import annotations


class SyntaxError(Exception):
    """Raised on the first malformed token or production. Carries a source position."""

    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.message = message
        self.line = line
        self.col = col


class DuplicateName(Exception):
    """Repeated class or member name within one scope."""


class SpecFormatError(Exception):
    """Malformed .libspec text."""


class UnknownMethodInMustCall(Exception):
    """A must_call entry names a method absent from the class's method map."""


class UnknownClass(Exception):
    """Class name resolvable neither in the program nor the library spec."""


class AnnotationConflict(Exception):
    """A declared annotation contradicts an inferred one."""


class StaleWarning(Exception):
    """A warning id no longer matches any allocation site in the program."""


class MaterializationFailure(Exception):
    """The anchor's surrounding structure does not admit the repair template."""

    def __init__(self, reason: str, detail: str = ""):
        super().__init__(f"{reason}: {detail}" if detail else reason)
        self.reason = reason
        self.detail = detail


class AmbiguousMapping(Exception):
    """A wrapper warning's owning-field chain reaches multiple distinct root warnings."""
