"""Exception hierarchy shared by the SER engines and the CLI."""

from __future__ import annotations


class StncError(Exception):
    """Base class for every error raised by this package."""

    #: machine-readable tag printed by the CLI ahead of the message
    code = "ERR_INTERNAL"
    exit_code = 4


class ValidationError(StncError, ValueError):
    code = "ERR_VALIDATION"
    exit_code = 2


class ParseError(StncError, ValueError):
    code = "ERR_PARSE"
    exit_code = 2

    def __init__(self, message: str, line: int | None = None, key: str | None = None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(f"key {key!r}")
        prefix = ", ".join(where)
        super().__init__(f"{prefix}: {message}" if prefix else message)
        self.line = line
        self.key = key


class NonIntegerFadingParameter(ValidationError):
    pass


class SingularCorrelation(ValidationError):
    pass


class CoincidentPoles(StncError, ArithmeticError):
    """Two branches share the same pole m/a, so the residue expansion is invalid."""

    code = "ERR_COINCIDENT_POLES"
    exit_code = 3

    def __init__(self, message: str, pair: tuple[int, int] | None = None, state: int | None = None):
        super().__init__(message)
        self.pair = pair
        self.state = state


class InternalConsistency(StncError, ArithmeticError):
    code = "ERR_INTERNAL"
    exit_code = 4


class TruncationFailure(StncError, ArithmeticError):
    """The characteristic function decays too slowly to truncate at the requested tolerance."""

    code = "ERR_TRUNCATION"
    exit_code = 4

    def __init__(self, message: str, achievable: float | None = None):
        super().__init__(message)
        self.achievable = achievable
