"""Exception types shared across the package.

Each error carries a stable machine-readable ``code`` so the experiment
runner can write it into ``report.json`` without string matching.
"""

from __future__ import annotations


class FurstError(Exception):
    code = "FURST_ERROR"


class DeterminantError(FurstError, ValueError):
    code = "DETERMINANT"

    def __init__(self, det: float, tol: float):
        super().__init__(f"|det - 1| = {abs(det - 1):.3g} exceeds tolerance {tol:g} (det = {det!r})")
        self.det = det
        self.tol = tol


class DegenerateError(FurstError, ValueError):
    """Singular values coincide, so the singular frame is undefined."""

    code = "DEGENERATE"


class DomainError(FurstError, ValueError):
    code = "FORMULA_DOMAIN"


class BudgetExceeded(FurstError, RuntimeError):
    code = "BUDGET_EXCEEDED"


class EmptyReport(FurstError, ValueError):
    code = "EMPTY_REPORT"


class ResolutionError(FurstError, ValueError):
    code = "RESOLUTION"


class EmptySampleError(FurstError, ValueError):
    code = "EMPTY_SAMPLE"


class EmptyComponent(FurstError, ValueError):
    code = "EMPTY_COMPONENT"


class UndersampledError(FurstError, ValueError):
    code = "UNDERSAMPLED"


class LevelMismatch(FurstError, ValueError):
    code = "LEVEL_MISMATCH"


class ConfigError(FurstError, ValueError):
    code = "CONFIG_ERROR"
