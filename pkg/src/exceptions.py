"""
Custom exceptions for group-model and metric computations
"""

from typing import Any, Dict, Optional


class BolicError(Exception):
    """Base exception for all toolkit errors"""

    exit_code: int = 3

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        self.message = message
        self.details = details or {}
        super().__init__(self.message)

    def __str__(self):
        return f"{self.__class__.__name__}: {self.message}"

    def to_dict(self) -> Dict[str, Any]:
        """Machine-readable form written to stderr by the CLI."""
        return {
            "error": self.__class__.__name__,
            "message": self.message,
            "exit_code": self.exit_code,
            "details": self.details,
        }


class OutOfLoadedBall(BolicError):
    """Raised when a computation leaves the loaded Cayley ball of a table model"""
    exit_code = 3


class BudgetExceeded(BolicError):
    """Raised when a configured resource cap (ball size, memo entries) is hit"""
    exit_code = 3


class FormatError(BolicError):
    """Raised when a table-model or cache file is malformed"""
    exit_code = 2

    def __init__(
        self,
        message: str,
        line: Optional[int] = None,
        field: Optional[str] = None,
        details: Optional[Dict[str, Any]] = None,
    ):
        self.line = line
        self.field = field
        details = dict(details or {})
        if line is not None:
            details["line"] = line
        if field is not None:
            details["field"] = field
        super().__init__(message, details)

    def __str__(self):
        where = []
        if self.field is not None:
            where.append(f"field {self.field}")
        if self.line is not None:
            where.append(f"line {self.line}")
        suffix = f" ({', '.join(where)})" if where else ""
        return f"FormatError: {self.message}{suffix}"


class DomainError(BolicError):
    """Raised when an argument lies outside an operation's domain"""
    exit_code = 2


class ConfigurationError(BolicError):
    """Raised when configuration is missing or invalid"""
    exit_code = 2


class InvariantViolation(BolicError):
    """Raised when an always-on invariant assertion fails"""
    exit_code = 1


class NonDecreasingRecursion(InvariantViolation):
    """Raised when the r recursion would not strictly decrease the distance"""
    pass


class FitFailure(BolicError):
    """Raised when a decay fit yields a base >= 1"""
    exit_code = 1


class CacheMismatchError(BolicError):
    """Raised when a memo cache was written for a different model configuration"""
    exit_code = 2
