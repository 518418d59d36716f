from __future__ import annotations


class DmirError(Exception):
    """Base for every error raised while reading a .dmir program."""

    def __init__(self, message: str, line: int = 0, col: int = 0) -> None:
        self.message = message
        self.line = line
        self.col = col
        where = f"{line}:{col}: " if line else ""
        super().__init__(f"{where}{message}")


class ParseError(DmirError):
    pass


class ResolveError(DmirError):
    pass


class LiteralTypeError(DmirError, TypeError):
    """A literal does not type-check against its declared type."""
