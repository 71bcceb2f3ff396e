"""The running-sup functional and the bounded three-point ratio.

f^2(n) = sup_{n' <= n} ||S_{n'}||^2 / n' is nondecreasing and, because the
normalized norms are superadditive, subadditive in n.  The three-point
ratio

    I(x, y) = (f^2(x+y) - f^2(x) + f^2(y)) / (2 f(x+y) f(y))

is bounded by 2 sqrt(y/(x+y)) whenever f^2(x)/x >= f^2(y)/y; the algebra
behind the bound actually yields sqrt(y/(x+y)), so both bounds are
computed and reported while only the looser one gates verdicts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import UndefinedRatioError
from .models import model_id
from .reports import DEFAULT_TOL, Tolerance
from .sums import GramEngine


@dataclass
class FSupTable:
    """f^2 on 1..N with the index attaining each running sup."""

    model: str
    N: int
    values: np.ndarray
    argmax: np.ndarray

    @classmethod
    def build(cls, engine: GramEngine, N: int) -> "FSupTable":
        if N < 1:
            raise ValueError("N must be >= 1")
        ns = np.arange(1, N + 1, dtype=np.int64)
        ratios = engine.sum_norm_sq_many(ns) / ns.astype(np.float64)
        values = np.maximum.accumulate(ratios)
        # argmax of the running sup: index where the current sup was attained
        arg = np.empty(N, dtype=np.int64)
        best, best_at = -math.inf, 1
        for i, r in enumerate(ratios):
            if r > best:
                best, best_at = r, i + 1
            arg[i] = best_at
        return cls(model=model_id(engine.model), N=N, values=values, argmax=arg)

    def f_sq(self, n: int) -> float:
        if not 1 <= n <= self.N:
            raise ValueError(f"table covers 1..{self.N}, asked for {n}")
        return float(self.values[n - 1])

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "N": self.N,
            "values": [float(v) for v in self.values],
            "argmax": [int(a) for a in self.argmax],
        }


def _table_for(engine: GramEngine, N: int) -> FSupTable:
    table = getattr(engine, "_fsup_table", None)
    if table is None or table.N < N:
        table = FSupTable.build(engine, N)
        engine._fsup_table = table
    return table


def f_sq(engine: GramEngine, n: int) -> float:
    """Running sup of ||S_{n'}||^2 / n' over n' <= n."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return _table_for(engine, n).f_sq(n)


@dataclass
class SubadditivityScan:
    model: str
    n_max: int
    pairs: int
    failures: int
    worst_slack: float          # min over pairs of f^2(n) + f^2(m) - f^2(n+m)
    worst_pair: tuple

    @property
    def passed(self) -> bool:
        return self.failures == 0

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "n_max": self.n_max,
            "pairs": self.pairs,
            "failures": self.failures,
            "worst_slack": self.worst_slack,
            "worst_pair": list(self.worst_pair),
        }


def subadditivity_scan(
    engine: GramEngine, n_max: int, tol: Tolerance = DEFAULT_TOL
) -> SubadditivityScan:
    """Exhaustively check f^2(n+m) <= f^2(n) + f^2(m) for n + m <= n_max."""
    if n_max < 2:
        raise ValueError("n_max must be >= 2")
    f = _table_for(engine, n_max).values
    worst = math.inf
    worst_pair = (0, 0)
    failures = 0
    pairs = 0
    for total in range(2, n_max + 1):
        ftot = f[total - 1]
        left = f[: total // 2]
        right = f[total - 2 :: -1][: total // 2]
        slack = left + right - ftot
        pairs += slack.size
        i = int(np.argmin(slack))
        if slack[i] < worst:
            worst = float(slack[i])
            worst_pair = (i + 1, total - i - 1)
        failures += int(np.count_nonzero(slack < -tol.allowance(ftot)))
    return SubadditivityScan(
        model=model_id(engine.model),
        n_max=n_max,
        pairs=pairs,
        failures=failures,
        worst_slack=worst,
        worst_pair=worst_pair,
    )


@dataclass
class IRatioReport:
    """The three-point ratio at (x, y) with both candidate bounds.

    p, q, r are the normalized sups f^2(x+y)/(x+y), f^2(y)/y, f^2(x)/x;
    the bound is claimed only under the condition r >= q.
    """

    model: str
    x: int
    y: int
    i_value: float
    paper_bound: float          # 2 sqrt(y / (x+y)), the gating bound
    proof_bound: float          # sqrt(y / (x+y)), the tighter empirical bound
    p: float
    q: float
    r: float
    condition_met: bool
    within_paper_bound: bool
    within_proof_bound: bool
    subadditivity_slack: float  # r x + q y - p (x+y), nonnegative by subadditivity

    @property
    def passed(self) -> bool:
        return self.within_paper_bound or not self.condition_met

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "x": self.x,
            "y": self.y,
            "i_value": self.i_value,
            "paper_bound": self.paper_bound,
            "proof_bound": self.proof_bound,
            "p": self.p,
            "q": self.q,
            "r": self.r,
            "condition_met": self.condition_met,
            "within_paper_bound": self.within_paper_bound,
            "within_proof_bound": self.within_proof_bound,
            "subadditivity_slack": self.subadditivity_slack,
        }


def prop_iratio(
    engine: GramEngine, x: int, y: int, tol: Tolerance = DEFAULT_TOL
) -> IRatioReport:
    if x < 1 or y < 1:
        raise ValueError("x and y must be >= 1")
    table = _table_for(engine, x + y)
    fx, fy, fxy = table.f_sq(x), table.f_sq(y), table.f_sq(x + y)
    if fxy <= 0.0 or fy <= 0.0:
        raise UndefinedRatioError(
            "I undefined: the running sup vanishes (identically zero model)"
        )
    i_value = (fxy - fx + fy) / (2.0 * math.sqrt(fxy) * math.sqrt(fy))
    paper_bound = 2.0 * math.sqrt(y / (x + y))
    proof_bound = math.sqrt(y / (x + y))
    p = fxy / (x + y)
    q = fy / y
    r = fx / x
    condition = r >= q - tol.allowance(q, r)
    return IRatioReport(
        model=model_id(engine.model),
        x=x,
        y=y,
        i_value=i_value,
        paper_bound=paper_bound,
        proof_bound=proof_bound,
        p=p,
        q=q,
        r=r,
        condition_met=condition,
        within_paper_bound=i_value <= paper_bound + tol.allowance(i_value),
        within_proof_bound=i_value <= proof_bound + tol.allowance(i_value),
        subadditivity_slack=r * x + q * y - p * (x + y),
    )
