"""Fractional difference transforms and range-membership diagnostics.

Applying (I - T)^alpha to the generating element multiplies each spectral
weight by |1 - e^{i theta}|^{2 alpha}; the atom at zero is annihilated
exactly.  Membership of the generator in the alpha = 1/2 range is
characterized by convergence of sum_n ||S_n||^2 / n^2, which this module
estimates on a doubling schedule with a crisp decision rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import ModelError
from .models import (
    Model,
    OperatorOrbitModel,
    SpectralAtomsModel,
    model_id,
)
from .sums import GramEngine

#: max |T*T - T T*| (relative to scale) accepted as "normal"
NORMALITY_TOL = 1e-9

#: a series is called converging when the last doubling increment is below this
SERIES_EPS_CONVERGE = 1e-4
#: and diverging when the last increments stay above this without decaying
SERIES_EPS_DIVERGE = 1e-3

#: default smallness threshold for decay traces
DECAY_EPS = 1e-3


@dataclass(frozen=True)
class FractionalTransform:
    alpha: float
    source: Model
    transformed: Model

    def to_dict(self) -> dict:
        from .models import model_to_dict

        return {
            "alpha": self.alpha,
            "source": model_id(self.source),
            "transformed": model_to_dict(self.transformed),
        }


def _spectral_multiplier(theta: np.ndarray, alpha: float) -> np.ndarray:
    # |1 - e^{i theta}|^{2 alpha} = (2 |sin(theta/2)|)^{2 alpha}
    return (2.0 * np.abs(np.sin(0.5 * theta))) ** (2.0 * alpha)


def apply_fractional(model: Model, alpha: float) -> FractionalTransform:
    """Transform a spectral model, or an orbit model with normal T, by the
    fractional difference of order alpha in (0, 1)."""
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")

    if model.kind == "spectral":
        pairs = []
        for t, w in zip(model.thetas, model.weights):
            if t == 0.0:
                continue  # multiplier vanishes exactly
            mult = float(_spectral_multiplier(np.array([t]), alpha)[0])
            if mult > 0.0:
                pairs.append((t, w * mult))
        transformed = (
            SpectralAtomsModel.from_atoms(pairs) if pairs else SpectralAtomsModel()
        )
        return FractionalTransform(alpha=alpha, source=model, transformed=transformed)

    if model.kind == "orbit":
        T = model.T
        scale = max(1.0, float(np.abs(T).max()) ** 2)
        commutator = float(np.abs(T.conj().T @ T - T @ T.conj().T).max())
        if commutator > NORMALITY_TOL * scale:
            raise ModelError(
                "T", f"fractional powers need a normal operator; |T*T - TT*| = {commutator:g}"
            )
        # normal T: complex Schur form is diagonal, giving the spectral calculus
        U, Q = scipy.linalg.schur(T, output="complex")
        lam = np.diag(U)
        mult = (1.0 - lam) ** alpha  # principal branch; Re(1 - lam) >= 0 on the disk
        x0 = Q @ (mult * (Q.conj().T @ model.x0))
        transformed = OperatorOrbitModel(
            T=T.copy(), x0=x0, declared_class=model.declared_class
        )
        return FractionalTransform(alpha=alpha, source=model, transformed=transformed)

    raise ModelError(
        "model", "fractional transform needs spectral access; covariance tables are rejected"
    )


@dataclass
class DecayTrace:
    """||S_n|| / n^{1-alpha} of a transformed model along a doubling schedule."""

    model: str
    alpha: float
    ns: list
    values: list
    final: float
    epsilon: float
    vanishing: bool

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "alpha": self.alpha,
            "epsilon": self.epsilon,
            "final": self.final,
            "vanishing": self.vanishing,
            "trace": [{"n": n, "value": v} for n, v in zip(self.ns, self.values)],
        }


def decay_trace(
    transform: FractionalTransform, N: int, epsilon: float = DECAY_EPS
) -> DecayTrace:
    """Trend of the normalized partial sums of the transformed model.

    Verdict "vanishing" requires the final value at n = N to be below
    ``epsilon`` and the schedule values to be nonincreasing within rounding
    slack.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    engine = GramEngine.for_model(transform.transformed)
    ns = []
    k = 1
    while k < N:
        ns.append(k)
        k *= 2
    ns.append(N)
    power = 1.0 - transform.alpha
    values = [math.sqrt(max(0.0, engine.sum_norm_sq(n))) / n ** power for n in ns]
    monotone = all(
        b <= a + 1e-12 + 1e-9 * max(1.0, a) for a, b in zip(values, values[1:])
    )
    final = values[-1]
    return DecayTrace(
        model=model_id(transform.transformed),
        alpha=transform.alpha,
        ns=ns,
        values=values,
        final=final,
        epsilon=epsilon,
        vanishing=final <= epsilon and monotone,
    )


@dataclass
class SeriesReport:
    """Partial sums of sum_n ||S_n||^2 / n^2 on a doubling schedule.

    Verdict rule: converging when the last doubling increment falls below
    1e-4; diverging when the last three increments all exceed 1e-3 without
    decaying (a fixed-space component makes them grow linearly, a borderline
    spectrum leaves them flat); inconclusive otherwise.
    """

    model: str
    Ns: list
    partial_sums: list
    increments: list
    verdict: str
    limit_estimate: float

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "verdict": self.verdict,
            "limit_estimate": self.limit_estimate,
            "schedule": [
                {"N": n, "partial_sum": s}
                for n, s in zip(self.Ns, self.partial_sums)
            ],
            "increments": self.increments,
        }


def membership_series(model: Model, N_max: int) -> SeriesReport:
    """Estimate convergence of sum ||S_n||^2 / n^2 for the model's generator."""
    if N_max < 2:
        raise ValueError("N_max must be >= 2")
    engine = GramEngine.for_model(model)
    checkpoints = []
    k = 2
    while k <= N_max:
        checkpoints.append(k)
        k *= 2

    terms = []
    partials = []
    start = 1
    for cp in checkpoints:
        ns = np.arange(start, cp + 1, dtype=np.int64)
        s = engine.sum_norm_sq_many(ns)
        terms.extend(s / ns.astype(np.float64) ** 2)
        partials.append(math.fsum(terms))
        start = cp + 1

    increments = [partials[0]] + [
        b - a for a, b in zip(partials, partials[1:])
    ]
    verdict = "inconclusive"
    if increments[-1] <= SERIES_EPS_CONVERGE:
        verdict = "converging"
    elif len(increments) >= 3:
        last = increments[-3:]
        above = all(x > SERIES_EPS_DIVERGE for x in last)
        not_decaying = all(b >= 0.9 * a for a, b in zip(last, last[1:]))
        if above and not_decaying:
            verdict = "diverging"
    return SeriesReport(
        model=model_id(model),
        Ns=checkpoints,
        partial_sums=partials,
        increments=increments,
        verdict=verdict,
        limit_estimate=partials[-1],
    )
