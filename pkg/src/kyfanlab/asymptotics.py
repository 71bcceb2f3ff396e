"""Limit diagnostics: subadditive traces, Cesaro averages, the fixed-space
projection for unitary orbits, and convergence in density.

Limits are never reported as bare scalars; every report carries the
estimate at the horizon together with its trend along a doubling schedule,
because the trend is the evidence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np

from .errors import ModelError, StationarityError
from .models import OperatorOrbitModel, model_id
from .reports import DEFAULT_TOL, Tolerance
from .sums import GramEngine, OrbitGram

#: singular values of (T - I) below this fraction of ||T|| span the fixed space
FIXED_SPACE_RTOL = 1e-8

SequenceSource = Union[Callable[[int], float], Sequence[float]]


def _seq_value(source: SequenceSource, n: int) -> float:
    if callable(source):
        return float(source(n))
    return float(source[n - 1])


def doubling_schedule(N: int) -> list[int]:
    """1, 2, 4, ... capped at N, always ending at N itself."""
    ns = []
    k = 1
    while k < N:
        ns.append(k)
        k *= 2
    ns.append(N)
    return ns


@dataclass
class FeketeTrace:
    """Running infimum of g_n / n for a (presumed) subadditive g."""

    N: int
    values: np.ndarray          # g_n / n for n = 1..N
    running_inf: np.ndarray
    argmin: int
    gap: float                  # value at N minus the running infimum
    spot_checked: bool
    spot_failures: list

    @property
    def limit_estimate(self) -> float:
        return float(self.running_inf[-1])

    def to_dict(self) -> dict:
        sampled = doubling_schedule(self.N)
        return {
            "N": self.N,
            "limit_estimate": self.limit_estimate,
            "argmin": self.argmin,
            "gap": self.gap,
            "spot_checked": self.spot_checked,
            "spot_failures": [list(p) for p in self.spot_failures],
            "trace": [
                {"n": n, "value": float(self.values[n - 1]),
                 "running_inf": float(self.running_inf[n - 1])}
                for n in sampled
            ],
        }


def fekete_limit(
    g: SequenceSource, N: int, spot_pairs: int = 0, seed: int = 0
) -> FeketeTrace:
    """Trace g_n / n and its running infimum up to n = N.

    For subadditive g the running infimum converges to the limit of g_n / n.
    Subadditivity is the caller's assertion; ``spot_pairs`` random pairs can
    be checked, with failures recorded in the trace (the conclusion is then
    void, not wrong).
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    gvals = np.array([_seq_value(g, n) for n in range(1, N + 1)], dtype=np.float64)
    ratios = gvals / np.arange(1, N + 1, dtype=np.float64)
    running = np.minimum.accumulate(ratios)
    argmin = int(np.argmin(ratios)) + 1

    failures = []
    if spot_pairs > 0:
        rng = np.random.Generator(np.random.Philox(seed))
        for _ in range(spot_pairs):
            n = int(rng.integers(1, max(2, N // 2)))
            m = int(rng.integers(1, N - n + 1))
            if gvals[n + m - 1] > gvals[n - 1] + gvals[m - 1] + 1e-9 * max(
                1.0, abs(gvals[n - 1]) + abs(gvals[m - 1])
            ):
                failures.append((n, m))

    return FeketeTrace(
        N=N,
        values=ratios,
        running_inf=running,
        argmin=argmin,
        gap=float(ratios[-1] - running[-1]),
        spot_checked=spot_pairs > 0,
        spot_failures=failures,
    )


@dataclass
class CesaroReport:
    """||S_N / N|| against the infimum of ||S_n / n||, with doubling trend."""

    model: str
    N: int
    lim_estimate: float         # ||S_N / N||
    lim_estimate_sq: float
    inf_estimate: float         # min over n <= N of ||S_n / n||
    inf_estimate_sq: float
    inf_argmin: int
    agreement: float            # |lim_estimate - inf_estimate|
    checkpoints: list           # (n, ||S_n/n||, running inf, agreement)
    trend_nonincreasing: bool

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "N": self.N,
            "lim_estimate": self.lim_estimate,
            "lim_estimate_sq": self.lim_estimate_sq,
            "inf_estimate": self.inf_estimate,
            "inf_estimate_sq": self.inf_estimate_sq,
            "inf_argmin": self.inf_argmin,
            "agreement": self.agreement,
            "trend_nonincreasing": self.trend_nonincreasing,
            "checkpoints": [
                {"n": n, "norm": v, "running_inf": r, "agreement": a}
                for n, v, r, a in self.checkpoints
            ],
        }


def cesaro_limit(engine: GramEngine, N: int, tol: Tolerance = DEFAULT_TOL) -> CesaroReport:
    """Check that ||S_n / n|| approaches its own infimum."""
    if not engine.model.stationary:
        raise StationarityError("Cesaro limit diagnostics require stationarity")
    if N < 1:
        raise ValueError("N must be >= 1")
    ns = np.arange(1, N + 1, dtype=np.int64)
    s = engine.sum_norm_sq_many(ns)
    norm_sq = s / (ns.astype(np.float64) ** 2)
    norms = np.sqrt(np.maximum(norm_sq, 0.0))
    running = np.minimum.accumulate(norms)
    argmin = int(np.argmin(norms)) + 1

    checkpoints = []
    for n in doubling_schedule(N):
        v = float(norms[n - 1])
        r = float(running[n - 1])
        checkpoints.append((n, v, r, abs(v - r)))
    agreements = [c[3] for c in checkpoints]
    trend = all(
        b <= a + tol.allowance(a) for a, b in zip(agreements, agreements[1:])
    )
    return CesaroReport(
        model=model_id(engine.model),
        N=N,
        lim_estimate=float(norms[-1]),
        lim_estimate_sq=float(norm_sq[-1]),
        inf_estimate=float(running[-1]),
        inf_estimate_sq=float(running[-1] ** 2),
        inf_argmin=argmin,
        agreement=abs(float(norms[-1]) - float(running[-1])),
        checkpoints=checkpoints,
        trend_nonincreasing=trend,
    )


@dataclass
class ProjectionReport:
    """Mean ergodic limit data for a unitary orbit.

    ``chi`` is the projection of X_1 onto the fixed space ker(T - I);
    ``riesz_angle`` measures orthogonality between the fixed space and the
    closure of range(I - T) (zero for unitary T).
    """

    model: str
    chi: np.ndarray
    chi_norm: float
    fixed_dim: int
    riesz_angle: float
    residuals: list             # (n, ||S_n/n - chi||)
    gap_to_one: float | None    # min |lambda - 1| over non-fixed eigenvalues
    bound_constant: float | None  # 2 ||x0|| / gap, when the gap exists

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "chi": [[z.real, z.imag] for z in self.chi],
            "chi_norm": self.chi_norm,
            "fixed_dim": self.fixed_dim,
            "riesz_angle": self.riesz_angle,
            "residuals": [{"n": n, "value": v} for n, v in self.residuals],
            "gap_to_one": self.gap_to_one,
            "bound_constant": self.bound_constant,
        }


def fixed_space_projection(model: OperatorOrbitModel, N: int) -> ProjectionReport:
    """Project X_1 = T x0 onto the fixed space of a unitary T and trace the
    Cesaro averages toward it."""
    if model.kind != "orbit":
        raise ModelError("model", "projection requires an orbit model")
    if not model.stationary:
        raise StationarityError("projection requires a unitary orbit")
    if N < 1:
        raise ValueError("N must be >= 1")

    T = model.T
    d = model.dim
    U, sing, Vh = np.linalg.svd(T - np.eye(d))
    opnorm = float(np.linalg.norm(T, 2))
    cut = FIXED_SPACE_RTOL * max(opnorm, 1.0)
    null_mask = sing <= cut
    V = Vh.conj().T
    v_null = V[:, null_mask]
    u_range = U[:, ~null_mask]

    x1 = T @ model.x0
    chi = v_null @ (v_null.conj().T @ x1) if v_null.shape[1] else np.zeros(d, complex)
    chi_norm = float(np.linalg.norm(chi))

    riesz = 0.0
    if v_null.shape[1] and u_range.shape[1]:
        riesz = float(np.abs(u_range.conj().T @ v_null).max())

    eigs = np.linalg.eigvals(T)
    non_fixed = np.abs(eigs - 1.0)
    non_fixed = non_fixed[non_fixed > cut]
    gap = float(non_fixed.min()) if non_fixed.size else None
    bound = 2.0 * float(np.linalg.norm(model.x0)) / gap if gap else None

    engine = OrbitGram(model)
    residuals = []
    for n in doubling_schedule(N):
        avg = engine.vector_at(n) / n
        residuals.append((n, float(np.linalg.norm(avg - chi))))

    return ProjectionReport(
        model=model_id(model),
        chi=chi,
        chi_norm=chi_norm,
        fixed_dim=int(null_mask.sum()),
        riesz_angle=riesz,
        residuals=residuals,
        gap_to_one=gap,
        bound_constant=bound,
    )


@dataclass
class DensityReport:
    """Cesaro-mean test for convergence in density to zero.

    For bounded sequences, D-lim a_n = 0 is equivalent to the Cesaro mean of
    |a_n| vanishing.  One threshold epsilon plays both roles: smallness of
    the mean and the required density of the small set.
    """

    N: int
    epsilon: float
    cesaro_mean: float
    density_of_small_set: float
    max_abs: float
    unreliable: bool            # running max still growing at N
    verdict: str                # "consistent-with-zero" | "not-consistent"

    def to_dict(self) -> dict:
        return {
            "N": self.N,
            "epsilon": self.epsilon,
            "cesaro_mean": self.cesaro_mean,
            "density_of_small_set": self.density_of_small_set,
            "max_abs": self.max_abs,
            "unreliable": self.unreliable,
            "verdict": self.verdict,
        }


def density_limit(a: SequenceSource, N: int, epsilon: float) -> DensityReport:
    if N < 1:
        raise ValueError("N must be >= 1")
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must lie in (0, 1)")
    vals = np.abs([_seq_value(a, n) for n in range(1, N + 1)])
    cesaro = float(math.fsum(vals) / N)
    density = float(np.count_nonzero(vals <= epsilon) / N)
    max_abs = float(vals.max())
    half_max = float(vals[: max(1, N // 2)].max())
    unreliable = max_abs > half_max * (1.0 + 1e-9)
    consistent = cesaro <= epsilon and density >= 1.0 - epsilon
    return DensityReport(
        N=N,
        epsilon=epsilon,
        cesaro_mean=cesaro,
        density_of_small_set=density,
        max_abs=max_abs,
        unreliable=unreliable,
        verdict="consistent-with-zero" if consistent else "not-consistent",
    )
