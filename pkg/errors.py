"""Exception hierarchy shared by the solver, the CLI and the API.

Every error knows its process exit code and how to render itself as the
machine-readable JSON written to stderr (CLI) or returned as a body (API).
"""
from typing import Any, Dict, Optional


class PackFlowError(Exception):
    exit_code = 1

    def __init__(self, message: str, **details: Any):
        super().__init__(message)
        self.message = message
        self.details = details

    def to_dict(self) -> Dict[str, Any]:
        return {
            "error": type(self).__name__,
            "message": self.message,
            "exit_code": self.exit_code,
            "details": {k: v for k, v in self.details.items() if _jsonable(v)},
        }


def _jsonable(value) -> bool:
    return isinstance(value, (str, int, float, bool, list, tuple, dict)) or value is None


# ─── Validation (exit 1) ─────────────────────────────────────────────

class ValidationFailed(PackFlowError):
    exit_code = 1


class BadMatching(ValidationFailed):
    pass


class EulerMismatch(ValidationFailed):
    pass


class DanglingVertex(ValidationFailed):
    pass


class DegenerateHinge(ValidationFailed):
    pass


class DomainError(ValidationFailed):
    pass


class NonPositiveInput(DomainError):
    pass


class TriangleInequalityViolated(ValidationFailed):
    def __init__(self, message: str, face: Optional[int] = None, slack: float = 0.0, **details):
        super().__init__(message, face=face, slack=slack, **details)
        self.face = face
        self.slack = slack


class NonpositiveDenominator(ValidationFailed):
    pass


class NotDelaunay(ValidationFailed):
    pass


class TargetInvalid(ValidationFailed):
    pass


class SurfaceMismatch(ValidationFailed):
    pass


# ─── Non-convergence (exit 2) ────────────────────────────────────────

class NonConvergence(PackFlowError):
    exit_code = 2

    def __init__(self, message: str, trace=None, **details):
        super().__init__(message, **details)
        self.trace = trace


class MaxIterations(NonConvergence):
    pass


class LineSearchStalled(NonConvergence):
    pass


class FlipBudgetExceeded(NonConvergence):
    pass


class SingularBeyondKernel(NonConvergence):
    pass


class SearchCapExceeded(NonConvergence):
    pass


# ─── I/O (exit 3) ────────────────────────────────────────────────────

class ProblemIOError(PackFlowError):
    exit_code = 3
