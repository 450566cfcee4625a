from typing import Any, Dict, Optional


class WindcastError(Exception):
    """
    Base error of the package.

    Errors are structured the same way everywhere: a stable machine-readable
    code, a user-facing message, an optional context naming where the error
    occurred and free-form details. The CLI turns exit_code into the process
    exit status; the API returns to_dict() as the error detail.
    """

    exit_code = 1
    default_code = "windcast_error"

    def __init__(
        self,
        message: str,
        code: Optional[str] = None,
        context: Optional[str] = None,
        details: Optional[Dict[str, Any]] = None,
    ):
        super().__init__(message)
        self.message = message
        self.code = code or self.default_code
        self.context = context
        self.details = details or {}

    def with_context(self, context: str) -> "WindcastError":
        """Prefix the context, keeping the error type and exit code."""
        self.context = f"{context} - {self.context}" if self.context else context
        return self

    def to_dict(self) -> Dict[str, Any]:
        error_obj: Dict[str, Any] = {"code": self.code, "message": self.message}
        if self.context:
            error_obj["context"] = self.context
        if self.details:
            error_obj["details"] = self.details
        return error_obj

    def __str__(self) -> str:
        if self.context:
            return f"{self.message} ({self.context})"
        return self.message


class UsageError(WindcastError):
    exit_code = 1
    default_code = "usage_error"


class DataError(WindcastError):
    exit_code = 2
    default_code = "data_error"


class NumericError(WindcastError):
    exit_code = 3
    default_code = "numeric_error"
