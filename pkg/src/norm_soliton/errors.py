"""Exception hierarchy; each class carries the CLI exit code it maps to."""

from __future__ import annotations


class NormSolitonError(Exception):
    exit_code = 1

    def __init__(self, message: str, **diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics

    def to_dict(self) -> dict:
        return {"error": type(self).__name__, "message": str(self), "diagnostics": self.diagnostics}


class ParameterError(NormSolitonError, ValueError):
    exit_code = 2


class RegimeError(NormSolitonError):
    """Parameters outside the region where the requested object exists."""

    exit_code = 2


class SolverError(NormSolitonError):
    exit_code = 3


class BoundaryTrapError(SolverError):
    """Local-min iterate stuck on the gradient cap."""


class StagnationError(SolverError):
    """Line search cannot decrease the objective."""


class BranchCaptureError(SolverError):
    """Mountain-pass descent fell onto the negative-level branch."""


class NumericError(NormSolitonError, ArithmeticError):
    exit_code = 4
