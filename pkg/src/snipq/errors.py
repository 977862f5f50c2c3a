"""Shared exception types.

The CLI maps exceptions onto exit codes: ValidationError (and other
ValueErrors) -> 1, OSError -> 2, EmptyResultError -> 3.
"""


class ValidationError(ValueError):
    """Malformed or contract-violating input data."""


class EmptyResultError(RuntimeError):
    """An operation produced no results where at least one was required."""
