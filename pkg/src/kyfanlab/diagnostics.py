"""Ratio statistics along index subsequences.

For an increasing sequence n_1 < n_2 < ... the per-step ratio

    R_k = ||S_{n_k}/n_k - S_{n_{k+1}}/n_{k+1}||^2 / (1/n_k - 1/n_{k+1})

decomposes, for stationary models, as

    R_k = ||S_{n_k}||^2/n_k - ||S_{n_{k+1}}||^2/n_{k+1} + ||S_{d_k}||^2/d_k

with d_k the gap n_{k+1} - n_k, so partial sums of R_k telescope.  Both
normalizations of the running sum (by the largest index and by the term
count) are first class because they behave very differently for
bounded-gap sequences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import PreconditionError, StationarityError
from .models import (
    Model,
    OperatorOrbitModel,
    SpectralAtomsModel,
    model_id,
)
from .reports import DEFAULT_TOL, CheckReport, Tolerance, identity_report
from .sums import GramEngine

_MAX_INDEX = 2 ** 62


@dataclass(frozen=True)
class IndexSequence:
    """Strictly increasing positive integers n_k, 1-indexed in k.

    Kinds: explicit list, arithmetic(a) with n_k = a k, geometric(base) with
    n_k = base^k, squares with n_k = k^2.
    """

    kind: str
    param: int = 0
    explicit: tuple = ()

    @classmethod
    def arithmetic(cls, a: int) -> "IndexSequence":
        if a < 1:
            raise ValueError("arithmetic step must be >= 1")
        return cls(kind="arithmetic", param=int(a))

    @classmethod
    def geometric(cls, base: int) -> "IndexSequence":
        if base < 2:
            raise ValueError("geometric base must be >= 2")
        return cls(kind="geometric", param=int(base))

    @classmethod
    def squares(cls) -> "IndexSequence":
        return cls(kind="squares")

    @classmethod
    def from_values(cls, values) -> "IndexSequence":
        vals = tuple(int(v) for v in values)
        if not vals or vals[0] < 1:
            raise ValueError("explicit sequence must start at a positive integer")
        for a, b in zip(vals, vals[1:]):
            if b <= a:
                raise ValueError(f"sequence not strictly increasing at {a} -> {b}")
        return cls(kind="explicit", explicit=vals)

    @classmethod
    def parse(cls, spec: str) -> "IndexSequence":
        """Parse inline forms: "arithmetic:3", "geometric:2", "squares",
        or a comma-separated explicit list "1,4,9,20"."""
        s = spec.strip()
        if s == "squares":
            return cls.squares()
        if ":" in s:
            kind, _, arg = s.partition(":")
            if kind == "arithmetic":
                return cls.arithmetic(int(arg))
            if kind == "geometric":
                return cls.geometric(int(arg))
            raise ValueError(f"unknown sequence kind {kind!r}")
        return cls.from_values(int(x) for x in s.split(","))

    def term(self, k: int) -> int:
        if k < 1:
            raise ValueError("k must be >= 1")
        if self.kind == "arithmetic":
            n = self.param * k
        elif self.kind == "geometric":
            n = self.param ** k
        elif self.kind == "squares":
            n = k * k
        else:
            if k > len(self.explicit):
                raise PreconditionError(
                    f"sequence has {len(self.explicit)} terms, asked for {k}"
                )
            n = self.explicit[k - 1]
        if n > _MAX_INDEX:
            raise PreconditionError(f"index n_{k} = {n} overflows the supported range")
        return n

    def terms(self, N: int) -> list[int]:
        return [self.term(k) for k in range(1, N + 1)]

    def label(self) -> str:
        if self.kind == "explicit":
            return f"explicit[{len(self.explicit)}]"
        if self.kind == "squares":
            return "squares"
        return f"{self.kind}:{self.param}"


@dataclass(frozen=True)
class ChainSpec:
    """Divisibility chain D_1 | D_2 | ... given by a base and integer ratios,
    so divisibility holds by construction."""

    d1: int
    ratios: tuple

    def __post_init__(self):
        if self.d1 < 1:
            raise ValueError("D_1 must be >= 1")
        if any(int(r) < 2 for r in self.ratios):
            raise ValueError("chain ratios must be integers >= 2")

    @classmethod
    def uniform(cls, base: int, depth: int) -> "ChainSpec":
        """D_j = base^j for j = 1..depth+1."""
        if base < 2:
            raise ValueError("base must be >= 2")
        return cls(d1=base, ratios=(base,) * depth)

    def levels(self, J: int) -> list[int]:
        """D_1 .. D_{J+1}; depth overflow beyond 63-bit indices is an error."""
        if J > len(self.ratios):
            raise PreconditionError(
                f"chain has depth {len(self.ratios)}, asked for {J}"
            )
        out = [self.d1]
        for r in self.ratios[:J]:
            nxt = out[-1] * int(r)
            if nxt > _MAX_INDEX:
                raise PreconditionError(f"chain level {nxt} overflows 63-bit range")
            out.append(nxt)
        return out


def ratio_statistic(engine: GramEngine, n_k: int, n_k1: int) -> float:
    """R_k for one pair n_k < n_{k+1}."""
    if not 1 <= n_k < n_k1:
        raise ValueError("need 1 <= n_k < n_k1")
    diff = engine.normalized_diff_sq(n_k, n_k1 - n_k, float(n_k), float(n_k1))
    return diff / (1.0 / n_k - 1.0 / n_k1)


def ratio_decomposition(engine: GramEngine, n_k: int, n_k1: int) -> tuple[float, float]:
    """(R_k, telescoping decomposition of R_k); both agree for stationary
    models up to rounding."""
    r = ratio_statistic(engine, n_k, n_k1)
    d = n_k1 - n_k
    dec = (
        engine.sum_norm_sq(n_k) / n_k
        - engine.sum_norm_sq(n_k1) / n_k1
        + engine.sum_norm_sq(d) / d
    )
    return r, dec


def recenter(model: Model) -> Model:
    """Remove the fixed-space (mean) component of a model.

    Spectral models drop the atom at angle zero; unitary orbits subtract the
    fixed-space projection from x0.  Covariance models are rejected: their
    representation gives no access to the mean component.
    """
    if model.kind == "spectral":
        pairs = [
            (t, w) for t, w in zip(model.thetas, model.weights) if t != 0.0
        ]
        return SpectralAtomsModel.from_atoms(pairs) if pairs else SpectralAtomsModel()
    if model.kind == "orbit" and model.stationary:
        d = model.dim
        U, sing, Vh = np.linalg.svd(model.T - np.eye(d))
        cut = 1e-8 * max(float(np.linalg.norm(model.T, 2)), 1.0)
        V = Vh.conj().T
        v_null = V[:, sing <= cut]
        x0 = model.x0 - (v_null @ (v_null.conj().T @ model.x0))
        return OperatorOrbitModel(T=model.T.copy(), x0=x0, declared_class="unitary")
    raise PreconditionError(
        f"re-centering is not available for {model.describe()}"
    )


@dataclass
class RatioReport:
    """Running ratio sums under both normalizations plus the telescoped
    closed form and the comparator bound."""

    model: str
    seq: str
    N: int
    n_values: list
    ratios: np.ndarray
    total: float
    by_nN: float                    # total / n_N
    by_count: float                 # total / (N - 1)
    telescoped: float               # s_{n_1}/n_1 - s_{n_N}/n_N + sum_k s_{d_k}/d_k
    decomposition_residual: float
    comparator_sup: float           # sup_k |s_{d_k}/d_k^2 - s_{n_N}/n_N^2|
    recentered: bool

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "seq": self.seq,
            "N": self.N,
            "n_first": self.n_values[0],
            "n_last": self.n_values[-1],
            "total": self.total,
            "by_nN": self.by_nN,
            "by_count": self.by_count,
            "telescoped": self.telescoped,
            "decomposition_residual": self.decomposition_residual,
            "comparator_sup": self.comparator_sup,
            "recentered": self.recentered,
        }


def ratio_sum(
    engine: GramEngine,
    seq: IndexSequence,
    N: int,
    recenter_model: bool = False,
) -> RatioReport:
    """Sum R_k over k = 1..N-1 along ``seq`` and compare with the telescoped
    closed form."""
    if N < 2:
        raise ValueError("need at least two sequence terms")
    if not engine.model.stationary:
        raise StationarityError("ratio sums require a weakly stationary model")
    if recenter_model:
        engine = GramEngine.for_model(recenter(engine.model))

    ns = seq.terms(N)
    ratios = np.empty(N - 1, dtype=np.float64)
    gap_terms = np.empty(N - 1, dtype=np.float64)
    for k in range(N - 1):
        ratios[k] = ratio_statistic(engine, ns[k], ns[k + 1])
        d = ns[k + 1] - ns[k]
        gap_terms[k] = engine.sum_norm_sq(d) / d

    total = math.fsum(ratios)
    s_first = engine.sum_norm_sq(ns[0]) / ns[0]
    s_last = engine.sum_norm_sq(ns[-1]) / ns[-1]
    telescoped = s_first - s_last + math.fsum(gap_terms)

    s_nN_sq = engine.sum_norm_sq(ns[-1]) / (float(ns[-1]) ** 2)
    gaps = np.diff(np.asarray(ns, dtype=np.float64))
    comparator = float(np.abs(gap_terms / gaps - s_nN_sq).max())

    return RatioReport(
        model=model_id(engine.model),
        seq=seq.label(),
        N=N,
        n_values=ns,
        ratios=ratios,
        total=total,
        by_nN=total / ns[-1],
        by_count=total / (N - 1),
        telescoped=telescoped,
        decomposition_residual=abs(total - telescoped),
        comparator_sup=comparator,
        recentered=recenter_model,
    )


def arithmetic_identity(
    engine: GramEngine, a: int, N: int, tol: Tolerance = DEFAULT_TOL
) -> CheckReport:
    """Exact closed form of the ratio average along n_k = a k:

        (1/(N a)) sum_{k<N} R_k  =  ||S_a||^2/a^2 - ||S_{aN}||^2/(aN)^2.

    The report also carries the re-centered statistic
    (1/(N a)) sum_k ||k (S_{a(k+1)} - S_{ak}) - S_{ak}||^2 / (a k (k+1)),
    which is the same quantity computed through a different route.
    """
    if a < 1 or N < 2:
        raise ValueError("need a >= 1 and N >= 2")
    if not engine.model.stationary:
        raise StationarityError("the arithmetic identity requires stationarity")

    seq = IndexSequence.arithmetic(a)
    ns = seq.terms(N)
    ratios = [ratio_statistic(engine, ns[k], ns[k + 1]) for k in range(N - 1)]
    lhs = math.fsum(ratios) / (N * a)

    s_a = engine.sum_norm_sq(a)
    s_aN = engine.sum_norm_sq(a * N)
    rhs = s_a / a ** 2 - s_aN / (a * N) ** 2

    # independent route: ||k S_{a(k+1)} - (k+1) S_{ak}||^2 expanded in Gram data
    c_terms = []
    for k in range(1, N):
        s_lo = engine.sum_norm_sq(a * k)
        s_hi = engine.sum_norm_sq(a * (k + 1))
        cross = engine.cross_inner(a * k, a)
        norm_sq = (
            k * k * s_hi + (k + 1) * (k + 1) * s_lo
            - 2.0 * k * (k + 1) * cross.real
        )
        c_terms.append(max(0.0, norm_sq) / (a * k * (k + 1)))
    c_statistic = math.fsum(c_terms) / (N * a)

    inputs = {"model": model_id(engine.model), "a": a, "N": N}
    return identity_report(
        "diag.arith",
        inputs,
        lhs,
        rhs,
        tol,
        extras={
            "c_statistic": c_statistic,
            "c_statistic_residual": abs(c_statistic - lhs),
        },
    )


@dataclass
class ChainReport:
    """Telescoping series over a divisibility chain.

    Every term is nonnegative, partial sums are nondecreasing, and each
    partial sum equals the telescoped difference of endpoint averages.
    """

    model: str
    levels: list
    terms: list
    partial_sums: list
    telescoped: list
    residuals: list
    total: float
    tail_estimate: float
    best_average_sq: float      # min over visited indices of ||S_q||^2/q^2

    @property
    def worst_residual(self) -> float:
        return max(self.residuals) if self.residuals else 0.0

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "levels": self.levels,
            "terms": self.terms,
            "partial_sums": self.partial_sums,
            "telescoped": self.telescoped,
            "residuals": self.residuals,
            "total": self.total,
            "tail_estimate": self.tail_estimate,
            "best_average_sq": self.best_average_sq,
        }


def chain_series(engine: GramEngine, chain: ChainSpec, J: int) -> ChainReport:
    """Accumulate the double sum over depths j = 1..J:

        term_j = (1/D_{j+1}) sum_{k=1}^{D_{j+1}/D_j - 1} R_k,  n_k = k D_j,

    whose partial sums telescope to (||S_{D_1}||/D_1)^2 - (||S_{D_{j+1}}||/
    D_{j+1})^2.  The tail estimate is the gap between the last endpoint
    average and the best average seen anywhere, an upper bound on what the
    remaining depths can still contribute.
    """
    if not engine.model.stationary:
        raise StationarityError("chain series require a weakly stationary model")
    levels = chain.levels(J)
    first_avg = engine.sum_norm_sq(levels[0]) / float(levels[0]) ** 2
    best_avg = first_avg

    terms = []
    partials = []
    telescoped = []
    residuals = []
    running = 0.0
    for j in range(J):
        a = levels[j]
        ratio = levels[j + 1] // a
        inner = []
        for k in range(1, ratio):
            inner.append(ratio_statistic(engine, k * a, (k + 1) * a))
            avg = engine.sum_norm_sq(k * a) / float(k * a) ** 2
            best_avg = min(best_avg, avg)
        term = math.fsum(inner) / levels[j + 1]
        terms.append(term)
        running += term
        partials.append(running)
        end_avg = engine.sum_norm_sq(levels[j + 1]) / float(levels[j + 1]) ** 2
        best_avg = min(best_avg, end_avg)
        tele = first_avg - end_avg
        telescoped.append(tele)
        residuals.append(abs(running - tele))

    last_avg = engine.sum_norm_sq(levels[-1]) / float(levels[-1]) ** 2
    return ChainReport(
        model=model_id(engine.model),
        levels=levels,
        terms=terms,
        partial_sums=partials,
        telescoped=telescoped,
        residuals=residuals,
        total=running,
        tail_estimate=last_avg - best_avg,
        best_average_sq=best_avg,
    )
