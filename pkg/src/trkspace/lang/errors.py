"""Error types raised by the Trk language frontend and interpreter."""

from __future__ import annotations


class TrkError(Exception):
    pass


class TrkSyntaxError(TrkError):
    def __init__(self, message: str, line: int, column: int = 0):
        super().__init__(f"line {line}:{column}: {message}")
        self.message = message
        self.line = line
        self.column = column


class TrkRuntimeError(TrkError):
    def __init__(self, message: str, line: int | None = None):
        where = f"line {line}: " if line is not None else ""
        super().__init__(f"{where}{message}")
        self.message = message
        self.line = line
