from enum import IntEnum
from typing import Any, Optional


class ExitCode(IntEnum):
    SUCCESS = 0
    PARSE = 2
    PRECONDITION = 3
    NUMERIC = 4
    VERIFICATION = 5


class SuperoscException(Exception):
    """Base error for the library.

    Shaped like an HTTP exception: the outcome class travels with the error as
    `exit_code` and `detail` names the violated precondition.
    """

    exit_code: ExitCode = ExitCode.PRECONDITION

    def __init__(self, detail: str, witness: Optional[Any] = None, exit_code: Optional[ExitCode] = None):
        super().__init__(detail)
        self.detail = detail
        self.witness = witness
        if exit_code is not None:
            self.exit_code = exit_code

    def __str__(self) -> str:
        if self.witness is None:
            return self.detail
        return f"{self.detail} (witness: {self.witness})"


class SpecParseError(SuperoscException):
    exit_code = ExitCode.PARSE


class HypothesisViolation(SuperoscException):
    exit_code = ExitCode.PRECONDITION


class ImageBoundViolation(HypothesisViolation):
    pass


class DuplicateFrequency(SuperoscException):
    exit_code = ExitCode.PRECONDITION


class SingularSystem(SuperoscException):
    exit_code = ExitCode.PRECONDITION


class UnknownSymbol(SuperoscException):
    exit_code = ExitCode.PRECONDITION


class UnknownDensity(SuperoscException):
    exit_code = ExitCode.PRECONDITION


class NumericOverflow(SuperoscException):
    exit_code = ExitCode.NUMERIC


class QuadratureNonConvergence(SuperoscException):
    exit_code = ExitCode.NUMERIC


class PrecisionExhausted(SuperoscException):
    exit_code = ExitCode.NUMERIC


class NearZeroSignal(SuperoscException):
    exit_code = ExitCode.NUMERIC


class StencilOverflow(SuperoscException):
    exit_code = ExitCode.NUMERIC


class VerificationFailure(SuperoscException):
    exit_code = ExitCode.VERIFICATION
