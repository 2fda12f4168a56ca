"""
Exception hierarchy for cvqkd.

Physics problems raise DomainError (CLI exit code 2); configuration and
usage problems raise ConfigError (CLI exit code 1).
"""
from typing import Dict, Optional


class CvqkdError(Exception):
    """Base class for every error raised by this package."""


class DomainError(CvqkdError, ValueError):
    """A value lies outside the physical domain of a formula."""


class UnphysicalCovarianceError(DomainError):
    """The Holevo computation produced an unphysical covariance matrix."""

    def __init__(self, message: str, intermediates: Optional[Dict[str, float]] = None):
        self.intermediates = dict(intermediates or {})
        if self.intermediates:
            detail = ", ".join(f"{k}={v!r}" for k, v in self.intermediates.items())
            message = f"{message} ({detail})"
        super().__init__(message)


class ConfigError(CvqkdError, ValueError):
    """Invalid configuration, flag or input file."""

    def __init__(self, message: str, line: Optional[int] = None, source: Optional[str] = None):
        self.line = line
        self.source = source
        if line is not None:
            where = f"{source}:{line}" if source else f"line {line}"
            message = f"{where}: {message}"
        super().__init__(message)


class TraceFormatError(ConfigError):
    """A trace file violates the #cvqkd-trace format."""

    def __init__(self, message: str, offset: int, source: Optional[str] = None):
        self.offset = offset
        where = f"{source} " if source else ""
        super().__init__(f"{where}at byte {offset}: {message}")
