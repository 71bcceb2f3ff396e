"""The core identity and its inequality family.

For a weakly stationary sequence the three-term average identity states

    ||S_n||^2/n + ||S_m||^2/m - ||S_{n+m}||^2/(n+m)
        = (n(n+m)/m) * ||S_n/n - S_{n+m}/(n+m)||^2

and weakens to ">=" under increment domination alone.  A subadditive
positive norming sequence alpha gives the generalized inequality

    (a_n a_{n+m} / a_m) ||S_n/a_n - S_{n+m}/a_{n+m}||^2
        <= ||S_n||^2/a_n + ||S_m||^2/a_m
           - (||S_{n+m}||^2/a_{n+m}) (a_{n+m} - a_n)/a_m

which reduces to the identity when alpha is linear and the model is
stationary.  Superadditivity of ||S_n||^2/n is the special consequence
checked by ``superadditivity_check``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import PreconditionError, StationarityError
from .models import Model, model_id
from .reports import (
    DEFAULT_TOL,
    CheckReport,
    ScanReport,
    Tolerance,
    identity_report,
    inequality_report,
)
from .sums import GramEngine


@dataclass(frozen=True)
class NormingSequence:
    """Positive norming weights alpha_n with subadditivity as the standing
    hypothesis (alpha_{n+m} <= alpha_n + alpha_m).

    Kinds: "linear" (alpha_n = n), "power" (alpha_n = n^delta, 0 <= delta <= 1,
    subadditive on that whole range), or an explicit positive table.
    """

    kind: str = "linear"
    delta: float = 1.0
    values: tuple = ()

    @classmethod
    def linear(cls) -> "NormingSequence":
        return cls(kind="linear")

    @classmethod
    def power(cls, delta: float) -> "NormingSequence":
        d = float(delta)
        if not 0.0 <= d <= 1.0:
            raise ValueError(f"power norming requires 0 <= delta <= 1, got {d}")
        return cls(kind="power", delta=d)

    @classmethod
    def from_values(cls, values) -> "NormingSequence":
        vals = tuple(float(v) for v in values)
        if not vals or any(v <= 0.0 or not math.isfinite(v) for v in vals):
            raise ValueError("explicit norming table must be positive and finite")
        return cls(kind="table", values=vals)

    def value(self, n: int) -> float:
        if n < 1:
            raise ValueError("norming index must be >= 1")
        if self.kind == "linear":
            return float(n)
        if self.kind == "power":
            return float(n) ** self.delta
        if n > len(self.values):
            raise PreconditionError(
                f"norming table defined up to {len(self.values)}, asked for {n}"
            )
        return self.values[n - 1]

    def subadditivity_slack(self, n: int, m: int) -> float:
        return self.value(n) + self.value(m) - self.value(n + m)

    def label(self) -> str:
        if self.kind == "power":
            return f"power({self.delta})"
        if self.kind == "linear":
            return "linear"
        return f"table[{len(self.values)}]"


def _require_stationary(engine: GramEngine, what: str) -> None:
    if not engine.model.stationary:
        raise StationarityError(f"{what} requires a weakly stationary model")


def _spot_check_condition3(engine: GramEngine, n: int, m: int, tol: Tolerance) -> None:
    """Increment domination ||S_{n+m} - S_n|| <= ||S_m|| at the queried pair."""
    if engine.model.stationary:
        return
    inc = engine.increment_norm_sq(n, m)
    s_m = engine.sum_norm_sq(m)
    if inc > s_m + tol.allowance(inc, s_m):
        raise PreconditionError(
            f"increment domination fails at (n={n}, m={m}): "
            f"||S_(n+m)-S_n||^2 = {inc:.6g} > ||S_m||^2 = {s_m:.6g}"
        )


def _base_inputs(engine: GramEngine, n: int, m: int) -> dict:
    return {"model": model_id(engine.model), "n": n, "m": m}


def kyfan_identity(
    engine: GramEngine, n: int, m: int, tol: Tolerance = DEFAULT_TOL
) -> CheckReport:
    """Exact identity check; both sides computed through different routes."""
    _require_stationary(engine, "the identity")
    st = engine.stats(n, m)
    lhs = st.s_n / n + st.s_m / m - st.s_nm / (n + m)
    diff = engine.normalized_diff_sq(n, m, float(n), float(n + m))
    rhs = (n * (n + m) / m) * diff
    return identity_report("kyfan.identity", _base_inputs(engine, n, m), lhs, rhs, tol)


def kyfan_inequality(
    engine: GramEngine, n: int, m: int, tol: Tolerance = DEFAULT_TOL
) -> CheckReport:
    """Inequality form under increment domination (spot-checked at (n, m))."""
    _spot_check_condition3(engine, n, m, tol)
    st = engine.stats(n, m)
    diff = engine.normalized_diff_sq(n, m, float(n), float(n + m))
    lhs = (n * (n + m) / m) * diff
    rhs = st.s_n / n + st.s_m / m - st.s_nm / (n + m)
    return inequality_report(
        "kyfan.inequality", _base_inputs(engine, n, m), lhs, rhs, tol
    )


def norming_inequality(
    engine: GramEngine,
    alpha: NormingSequence,
    n: int,
    m: int,
    tol: Tolerance = DEFAULT_TOL,
) -> CheckReport:
    """Generalized inequality with a subadditive norming sequence.

    Addressable from the CLI as ``kyfan.lemma1``.
    """
    a_n, a_m, a_nm = alpha.value(n), alpha.value(m), alpha.value(n + m)
    slack = a_n + a_m - a_nm
    if slack < -tol.allowance(a_n + a_m):
        raise PreconditionError(
            f"norming sequence not subadditive at (n={n}, m={m}): "
            f"alpha({n + m}) = {a_nm:.6g} > {a_n:.6g} + {a_m:.6g}"
        )
    _spot_check_condition3(engine, n, m, tol)
    st = engine.stats(n, m)
    diff = engine.normalized_diff_sq(n, m, a_n, a_nm)
    lhs = (a_n * a_nm / a_m) * diff
    rhs = st.s_n / a_n + st.s_m / a_m - (st.s_nm / a_nm) * ((a_nm - a_n) / a_m)
    inputs = _base_inputs(engine, n, m)
    inputs["alpha"] = alpha.label()
    return inequality_report("kyfan.lemma1", inputs, lhs, rhs, tol)


def superadditivity_check(
    engine: GramEngine, n: int, m: int, tol: Tolerance = DEFAULT_TOL
) -> CheckReport:
    """||S_{n+m}||^2/(n+m) <= ||S_n||^2/n + ||S_m||^2/m for stationary models."""
    _require_stationary(engine, "superadditivity")
    st = engine.stats(n, m)
    lhs = st.s_nm / (n + m)
    rhs = st.s_n / n + st.s_m / m
    return inequality_report("kyfan.superadd", _base_inputs(engine, n, m), lhs, rhs, tol)


def _run_named(engine, name, n, m, tol, delta):
    if name == "kyfan.identity":
        return kyfan_identity(engine, n, m, tol)
    if name == "kyfan.inequality":
        return kyfan_inequality(engine, n, m, tol)
    if name == "kyfan.lemma1":
        alpha = NormingSequence.power(1.0 if delta is None else delta)
        return norming_inequality(engine, alpha, n, m, tol)
    if name == "kyfan.superadd":
        return superadditivity_check(engine, n, m, tol)
    raise ValueError(f"unknown check {name!r}")


CHECK_NAMES = ("kyfan.identity", "kyfan.inequality", "kyfan.lemma1", "kyfan.superadd")


def scan(
    model: Model,
    check: str,
    n_max: int,
    m_max: int,
    sampling: str = "exhaustive",
    count: int | None = None,
    seed: int = 0,
    workers: int = 1,
    delta: float | None = None,
    tol: Tolerance = DEFAULT_TOL,
) -> ScanReport:
    """Run one named check over a grid of (n, m) cells.

    Exhaustive sampling visits every pair with n <= n_max, m <= m_max;
    random sampling draws ``count`` pairs from a counter-based generator so
    a fixed seed reproduces the cell list exactly.  Per-cell precondition
    errors are recorded in the aggregate instead of aborting the scan, and
    the aggregate is assembled in cell order, so the worker count never
    changes the result.
    """
    if check not in CHECK_NAMES:
        raise ValueError(f"unknown check {check!r}; expected one of {CHECK_NAMES}")
    if n_max < 1 or m_max < 1:
        raise ValueError("n_max and m_max must be >= 1")

    if sampling == "exhaustive":
        cells = [(n, m) for n in range(1, n_max + 1) for m in range(1, m_max + 1)]
    elif sampling == "random":
        if not count or count < 1:
            raise ValueError("random sampling requires count >= 1")
        rng = np.random.Generator(np.random.Philox(seed))
        ns = rng.integers(1, n_max + 1, size=count)
        ms = rng.integers(1, m_max + 1, size=count)
        cells = [(int(a), int(b)) for a, b in zip(ns, ms)]
    else:
        raise ValueError(f"unknown sampling {sampling!r}")

    def eval_chunk(chunk):
        local = GramEngine.for_model(model)
        out = []
        for n, m in chunk:
            try:
                out.append(_run_named(local, check, n, m, tol, delta))
            except Exception as exc:  # recorded, never aborts the scan
                out.append({"n": n, "m": m, "error": f"{type(exc).__name__}: {exc}"})
        return out

    if workers <= 1 or len(cells) < 2:
        results = eval_chunk(cells)
    else:
        chunks = [cells[i::workers] for i in range(workers)]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(eval_chunk, chunks))
        # re-interleave back to cell order
        results = [None] * len(cells)
        for w, part in enumerate(parts):
            for j, item in enumerate(part):
                results[w + j * workers] = item

    failures = []
    errors = []
    worst = -math.inf
    worst_cell = None
    abs_sum = 0.0
    passes = 0
    for (n, m), res in zip(cells, results):
        if isinstance(res, dict):
            errors.append(res)
            continue
        abs_sum += abs(res.residual)
        if res.residual > worst:
            worst = res.residual
            worst_cell = (n, m)
        if res.passed:
            passes += 1
        else:
            failures.append(res)

    evaluated = len(cells) - len(errors)
    return ScanReport(
        check=check,
        model=model_id(model),
        params={
            "n_max": n_max,
            "m_max": m_max,
            "sampling": sampling,
            "count": count,
            "seed": seed,
            "workers": workers,
            "delta": delta,
        },
        cells=len(cells),
        pass_count=passes,
        failures=failures,
        errors=errors,
        worst_residual=worst if evaluated else 0.0,
        worst_cell=worst_cell,
        mean_abs_residual=abs_sum / evaluated if evaluated else 0.0,
    )
