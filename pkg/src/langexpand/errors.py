"""Shared exception types.

ValidationError covers bad arguments / preconditions (CLI exit code 1),
DataError covers malformed or inconsistent input data (CLI exit code 2).
"""


class LangexpandError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(LangexpandError):
    """Invalid parameters or violated preconditions."""


class DataError(LangexpandError):
    """Malformed, truncated, or internally inconsistent data."""


class MatrixFormatError(DataError):
    """Problem with the binary embedding-matrix format."""

    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code
