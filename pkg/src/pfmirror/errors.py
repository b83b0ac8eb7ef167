"""Exception hierarchy shared by all pfmirror modules."""

from __future__ import annotations


class PFMirrorError(Exception):
    """Base class; the CLI maps any subclass to exit code 1."""

    code = "error"

    def to_json(self) -> dict:
        return {"error": self.code, "message": str(self)}


class DegenerateDivisor(PFMirrorError, ZeroDivisionError):
    code = "degenerate_divisor"


class NotInvertible(PFMirrorError):
    code = "not_invertible"


class DomainError(PFMirrorError, ValueError):
    code = "domain_error"


class NotFuchsian(PFMirrorError):
    code = "not_fuchsian"


class NotMUM(PFMirrorError):
    code = "not_mum"


class OrderTooSmall(PFMirrorError, ValueError):
    code = "order_too_small"


class SideMismatch(PFMirrorError):
    code = "side_mismatch"


class IntegralityFailure(PFMirrorError):
    code = "integrality_failure"


class CalibrationFailure(PFMirrorError):
    code = "calibration_failure"


class IncompleteTable(PFMirrorError, KeyError):
    code = "incomplete_table"

    def __str__(self) -> str:  # KeyError quotes its argument otherwise
        return Exception.__str__(self)


class PrecisionExhausted(PFMirrorError):
    code = "precision_exhausted"


class NotIntegral(PFMirrorError):
    code = "not_integral"


class FitFailure(PFMirrorError):
    code = "fit_failure"

    def __init__(self, message: str, residuals: dict | None = None):
        super().__init__(message)
        self.residuals = residuals or {}

    def to_json(self) -> dict:
        out = super().to_json()
        out["residuals"] = {k: str(v) for k, v in self.residuals.items()}
        return out


class ConfigError(PFMirrorError, ValueError):
    code = "config_error"
