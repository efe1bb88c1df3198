"""Exception types shared across the package."""

from __future__ import annotations


class PovconcError(Exception):
    """Base class for every error raised by povconc."""


class DataError(PovconcError, ValueError):
    """Bad input data. ``source`` and ``line`` locate it when known."""

    def __init__(self, message: str, *, source: str | None = None, line: int | None = None):
        self.message = message
        self.source = source
        self.line = line
        super().__init__(self._render())

    def _render(self) -> str:
        where = ""
        if self.source and self.line is not None:
            where = f"{self.source}:{self.line}: "
        elif self.source:
            where = f"{self.source}: "
        elif self.line is not None:
            where = f"line {self.line}: "
        return where + self.message

    def with_source(self, source: str) -> "DataError":
        self.source = source
        self.args = (self._render(),)
        return self


class SchemaError(DataError):
    """A required column is missing."""


class RowError(DataError):
    """A data row violates a field constraint."""


class DuplicateKeyError(DataError):
    """Two rows share (tract_id, msa, year)."""


class GeometryError(DataError):
    """Unsupported or malformed place geometry."""


class DegenerateError(PovconcError, ValueError):
    """An index is undefined for this snapshot (a denominator vanishes)."""


class ConfigError(PovconcError, ValueError):
    """Invalid run configuration or command-line usage."""
