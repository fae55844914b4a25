"""Pass/fail records shared by the verification and operator checks."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

MACHINE_FLOOR = np.finfo(float).tiny
ABSOLUTE_TOL = 1e-13


@dataclass(frozen=True)
class ResidualReport:
    """Outcome of one numerical check.

    ``relative = residual_norm / max(reference_scale, floor)``. When the
    reference scale is exactly zero every operand vanished, and the check
    falls back to an absolute comparison at ``1e-13``.
    """

    name: str
    residual_norm: float
    reference_scale: float
    relative: float
    tolerance: float
    passed: bool
    context: dict = field(default_factory=dict)

    @classmethod
    def build(cls, name, residual, scale, tolerance, **context) -> ResidualReport:
        residual = float(residual)
        scale = float(scale)
        if scale == 0.0:
            tolerance = min(tolerance, ABSOLUTE_TOL)
            context = {**context, "absolute": True}
        relative = residual / max(scale, MACHINE_FLOOR)
        if scale == 0.0:
            relative = residual
        passed = bool(np.isfinite(relative) and relative <= tolerance)
        return cls(name, residual, scale, relative, float(tolerance), passed, context)

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "residual": self.residual_norm,
            "scale": self.reference_scale,
            "relative": self.relative,
            "tolerance": self.tolerance,
            "passed": self.passed,
            "context": _jsonable(self.context),
        }

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return f"[{flag}] {self.name}: relative={self.relative:.3e} tol={self.tolerance:.1e}"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


def all_passed(reports) -> bool:
    return all(r.passed for r in reports)


__all__ = ["ResidualReport", "all_passed"]
