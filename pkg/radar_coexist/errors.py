"""Exception hierarchy shared by the library, the CLI and the HTTP API."""

from __future__ import annotations


class CoexistError(Exception):
    """Base class for every error raised on purpose by radar_coexist."""


class ConfigError(CoexistError, ValueError):
    """The scenario document is missing mandatory keys or cannot be parsed."""

    def __init__(self, message: str, missing: list[str] | None = None) -> None:
        super().__init__(message)
        self.missing = missing or []


class ConfigValidationError(CoexistError, ValueError):
    """A configuration value violates a documented bound."""

    def __init__(self, problems: list[str]) -> None:
        super().__init__("; ".join(problems))
        self.problems = problems


class DomainError(CoexistError, ValueError):
    """A model was evaluated outside its domain (non-positive distance, bad ITM input, ...)."""


class OutputDirectoryError(CoexistError, OSError):
    """The output directory cannot be created or written."""
