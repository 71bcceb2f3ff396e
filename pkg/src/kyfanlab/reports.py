"""Uniform check reports and the tolerance policy.

Every verdict in the lab follows one rule: a residual is accepted when

    residual <= atol + rtol * scale,   scale = max(1, |quantities involved|)

with atol = 1e-12 and rtol = 1e-9 unless overridden.  Reports always carry
both sides of an identity or inequality, never just the verdict.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np

VERDICT_IDENTITY = "identity-pass"
VERDICT_INEQUALITY = "inequality-pass"
VERDICT_FAIL = "fail"


@dataclass(frozen=True)
class Tolerance:
    atol: float = 1e-12
    rtol: float = 1e-9

    def allowance(self, *scales: float) -> float:
        scale = 1.0
        for s in scales:
            scale = max(scale, abs(s))
        return self.atol + self.rtol * scale

    def accepts(self, residual: float, *scales: float) -> bool:
        return residual <= self.allowance(*scales)


DEFAULT_TOL = Tolerance()


@dataclass(frozen=True)
class CheckReport:
    """One check at one set of inputs.

    For identity checks ``residual`` is |lhs - rhs|; for inequality checks
    it is the signed excess lhs - rhs (positive means the inequality is
    tight or violated).  ``verdict`` is consistent with residual <= tolerance
    by construction.
    """

    check: str
    inputs: dict
    lhs: float
    rhs: float
    residual: float
    tolerance: float
    verdict: str
    extras: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.verdict != VERDICT_FAIL

    def to_dict(self) -> dict:
        d = {
            "check": self.check,
            "inputs": dict(self.inputs),
            "lhs": self.lhs,
            "rhs": self.rhs,
            "residual": self.residual,
            "tolerance": self.tolerance,
            "verdict": self.verdict,
        }
        if self.extras:
            d["extras"] = to_jsonable(self.extras)
        return d


def identity_report(check, inputs, lhs, rhs, tol, extras=None) -> CheckReport:
    residual = abs(lhs - rhs)
    allowance = tol.allowance(lhs, rhs)
    return CheckReport(
        check=check,
        inputs=inputs,
        lhs=lhs,
        rhs=rhs,
        residual=residual,
        tolerance=allowance,
        verdict=VERDICT_IDENTITY if residual <= allowance else VERDICT_FAIL,
        extras=extras or {},
    )


def inequality_report(check, inputs, lhs, rhs, tol, extras=None) -> CheckReport:
    residual = lhs - rhs
    allowance = tol.allowance(lhs, rhs)
    return CheckReport(
        check=check,
        inputs=inputs,
        lhs=lhs,
        rhs=rhs,
        residual=residual,
        tolerance=allowance,
        verdict=VERDICT_INEQUALITY if residual <= allowance else VERDICT_FAIL,
        extras=extras or {},
    )


@dataclass
class ScanReport:
    """Aggregate of one check over a grid of (n, m) cells."""

    check: str
    model: str
    params: dict
    cells: int
    pass_count: int
    failures: list
    errors: list
    worst_residual: float
    worst_cell: tuple | None
    mean_abs_residual: float

    @property
    def passed(self) -> bool:
        return not self.failures and not self.errors

    def to_dict(self) -> dict:
        return {
            "check": self.check,
            "model": self.model,
            "params": to_jsonable(self.params),
            "cells": self.cells,
            "pass_count": self.pass_count,
            "failures": [f.to_dict() for f in self.failures],
            "errors": list(self.errors),
            "worst_residual": self.worst_residual,
            "worst_cell": list(self.worst_cell) if self.worst_cell else None,
            "mean_abs_residual": self.mean_abs_residual,
        }


def to_jsonable(obj):
    """Convert dataclasses, numpy scalars/arrays and complex numbers into
    plain JSON-serializable values (complex becomes [re, im])."""
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        if hasattr(obj, "to_dict"):
            return obj.to_dict()
        return to_jsonable(dataclasses.asdict(obj))
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [obj.real, obj.imag]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    return obj
