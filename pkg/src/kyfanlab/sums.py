"""Partial-sum Gram machinery.

Everything downstream reduces to three quantities per model:

* ``sum_norm_sq(n)``        = ||S_n||^2,  S_n = X_1 + ... + X_n
* ``cross_inner(n, m)``     = <S_n, S_{n+m}>
* derived increments and normalized differences.

Each model kind gets its own evaluation route so the routes can serve as
oracles for one another:

* covariance: n*gamma(0) + 2*sum_{h<n} (n-h) Re gamma(h), advanced
  incrementally in O(1) amortized through a compensated prefix sum;
* spectral:   sum_j w_j K_n(theta_j) with the squared Dirichlet-type kernel;
* orbit:      literal forward walk v <- T v accumulated into S_n.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import HorizonError
from .models import (
    CovarianceModel,
    Model,
    OperatorOrbitModel,
    SpectralAtomsModel,
)
from .summation import CompensatedSum, CompensatedVectorSum, cos_sin_exact

#: below this angle the kernel quotient switches to its Taylor form
SMALL_THETA = 1e-7

#: orbit walks snapshot the state every this many steps for replay
_SNAP_EVERY = 64


def _half_angle_sin(n: int, theta) -> np.ndarray:
    """sin(n * theta / 2) with the index-angle product split exactly.

    Rounding n*theta to one double costs up to an ulp of the product, which
    is far above working precision once n*theta is large; the split keeps
    kernel values accurate at chain-scale indices.
    """
    _, s = cos_sin_exact(0.5 * float(n), theta)
    return s


def dirichlet_kernel_sq(theta: float, n: int) -> float:
    """K_n(theta) = |sum_{k=1}^n e^{ik theta}|^2.

    Equals sin^2(n theta/2) / sin^2(theta/2) away from zero and n^2 at
    theta = 0.  For |theta| < 1e-7 the quotient is evaluated through the
    expansion n^2 (1 - (n^2 - 1) theta^2 / 12), avoiding 0/0 amplification.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    if abs(theta) < SMALL_THETA:
        return max(0.0, n * n * (1.0 - (n * n - 1.0) * theta * theta / 12.0))
    s = math.sin(0.5 * theta)
    t = float(_half_angle_sin(n, theta))
    return (t * t) / (s * s)


def kernel_sq_array(thetas: np.ndarray, n: int) -> np.ndarray:
    """Vectorized ``dirichlet_kernel_sq`` over an angle array."""
    th = np.asarray(thetas, dtype=np.float64)
    small = np.abs(th) < SMALL_THETA
    safe = np.where(small, 1.0, th)
    s = np.sin(0.5 * safe)
    t = _half_angle_sin(n, safe)
    series = n * n * (1.0 - (n * n - 1.0) * th * th / 12.0)
    return np.where(small, np.maximum(series, 0.0), (t * t) / (s * s))


def dirichlet_sum(theta: float, n: int) -> complex:
    """D_n(theta) = sum_{k=1}^n e^{ik theta}."""
    if theta == 0.0:
        return complex(n)
    ratio = float(_half_angle_sin(n, theta)) / math.sin(0.5 * theta)
    c, s = cos_sin_exact(0.5 * (n + 1), theta)
    return complex(float(c), float(s)) * ratio


def dirichlet_sum_array(thetas: np.ndarray, n: int) -> np.ndarray:
    th = np.asarray(thetas, dtype=np.float64)
    zero = th == 0.0
    safe = np.where(zero, 1.0, th)
    ratio = _half_angle_sin(n, safe) / np.sin(0.5 * safe)
    c, s = cos_sin_exact(0.5 * (n + 1), safe)
    vals = (c + 1j * s) * ratio
    return np.where(zero, complex(n), vals)


@dataclass(frozen=True)
class SumStats:
    """The Gram data of one (n, m) query.

    ``inc`` is ||S_{n+m} - S_n||^2.  Cauchy-Schwarz |cross|^2 <= s_n * s_nm
    holds up to rounding for every model.
    """

    n: int
    m: int
    s_n: float
    s_m: float
    s_nm: float
    cross: complex
    inc: float

    def cauchy_schwarz_slack(self) -> float:
        return self.s_n * self.s_nm - abs(self.cross) ** 2


class GramEngine:
    """Cached evaluator of partial-sum norms and inner products.

    One engine serves one model.  The cache is single-writer: share models
    across workers, not engines.  All results are deterministic and do not
    depend on query order.
    """

    def __init__(self, model: Model):
        self.model = model
        self._cross_cache: dict[tuple[int, int], complex] = {}
        self._stats_cache: dict[tuple[int, int], SumStats] = {}

    @staticmethod
    def for_model(model: Model) -> "GramEngine":
        if model.kind == "covariance":
            return CovarianceGram(model)
        if model.kind == "spectral":
            return SpectralGram(model)
        return OrbitGram(model)

    # -- per-kind primitives ------------------------------------------------

    def sum_norm_sq(self, n: int) -> float:
        raise NotImplementedError

    def _cross(self, n: int, m: int) -> complex:
        raise NotImplementedError

    # -- shared derived quantities -------------------------------------------

    def sum_norm_sq_many(self, ns) -> np.ndarray:
        return np.array([self.sum_norm_sq(int(n)) for n in ns], dtype=np.float64)

    def cross_inner(self, n: int, m: int) -> complex:
        if n < 1 or m < 1:
            raise ValueError("cross_inner requires n, m >= 1")
        key = (n, m)
        val = self._cross_cache.get(key)
        if val is None:
            val = self._cross(n, m)
            self._cross_cache[key] = val
        return val

    def increment_norm_sq(self, n: int, m: int) -> float:
        """||S_{n+m} - S_n||^2 (n = 0 gives ||S_m||^2)."""
        if n < 0 or m < 1:
            raise ValueError("increment_norm_sq requires n >= 0, m >= 1")
        if n == 0:
            return self.sum_norm_sq(m)
        s_n = self.sum_norm_sq(n)
        s_nm = self.sum_norm_sq(n + m)
        cross = self.cross_inner(n, m)
        return max(0.0, s_nm - 2.0 * cross.real + s_n)

    def normalized_diff_sq(self, n: int, m: int, a_n: float, a_nm: float) -> float:
        """||S_n / a_n - S_{n+m} / a_nm||^2."""
        if a_n <= 0.0 or a_nm <= 0.0:
            raise ValueError("norming values must be positive")
        s_n = self.sum_norm_sq(n)
        s_nm = self.sum_norm_sq(n + m)
        cross = self.cross_inner(n, m)
        return max(0.0, s_n / (a_n * a_n) + s_nm / (a_nm * a_nm)
                   - 2.0 * cross.real / (a_n * a_nm))

    def stats(self, n: int, m: int) -> SumStats:
        if n < 1 or m < 1:
            raise ValueError("stats requires n, m >= 1")
        cached = self._stats_cache.get((n, m))
        if cached is not None:
            return cached
        s_n = self.sum_norm_sq(n)
        s_m = self.sum_norm_sq(m)
        s_nm = self.sum_norm_sq(n + m)
        cross = self.cross_inner(n, m)
        inc = max(0.0, s_nm - 2.0 * cross.real + s_n)
        result = SumStats(n=n, m=m, s_n=s_n, s_m=s_m, s_nm=s_nm, cross=cross, inc=inc)
        self._stats_cache[(n, m)] = result
        return result


class CovarianceGram(GramEngine):
    """Prefix-based incremental evaluation for covariance models.

    ||S_n||^2 - ||S_{n-1}||^2 = gamma(0) + 2 * sum_{h<=n-1} Re gamma(h),
    so one compensated prefix accumulator advances the cache in O(1)
    amortized per n.
    """

    def __init__(self, model: CovarianceModel):
        super().__init__(model)
        self._g0 = model.gamma(0).real
        self._s = [0.0]
        self._s_acc = CompensatedSum()
        self._p_acc = CompensatedSum()
        self._gam = model.gamma_array(0)

    def _gamma_upto(self, hmax: int) -> np.ndarray:
        if hmax >= len(self._gam):
            limit = self.model.max_lag
            if limit is not None and hmax > limit:
                raise HorizonError(
                    f"lag {hmax} beyond table horizon {limit}"
                )
            grow = max(hmax, 2 * len(self._gam))
            if limit is not None:
                grow = min(grow, limit)
            self._gam = self.model.gamma_array(grow)
        return self._gam

    def _ensure(self, n: int) -> None:
        if n < len(self._s):
            return
        gam = self._gamma_upto(n - 1)
        g0 = self._g0
        s_acc, p_acc = self._s_acc, self._p_acc
        append = self._s.append
        for k in range(len(self._s), n + 1):
            if k >= 2:
                p_acc.add(gam[k - 1].real)
            # the doubled prefix is consumed as an exact (hi, lo) pair
            s_acc.add(g0)
            s_acc.add(2.0 * p_acc.hi)
            s_acc.add(2.0 * p_acc.lo)
            append(s_acc.value)

    def sum_norm_sq(self, n: int) -> float:
        if n < 0:
            raise ValueError("n must be >= 0")
        self._ensure(n)
        return self._s[n]

    def sum_norm_sq_many(self, ns) -> np.ndarray:
        ns = np.asarray(ns, dtype=np.int64)
        if ns.size:
            self._ensure(int(ns.max()))
        s = np.asarray(self._s)
        return s[ns]

    def _cross(self, n: int, m: int) -> complex:
        # <S_n, S_{n+m}> summed by diagonals: O(n + m) per query.
        gam = self._gamma_upto(n + m - 1)
        d = np.arange(n, dtype=np.float64)
        total = np.dot(n - d, gam[:n])
        e_near = gam[1 : min(m, n + m - 1) + 1]
        total += n * np.conj(e_near).sum()
        if n + m - 1 > m:
            e = np.arange(m + 1, n + m)
            total += np.dot((n + m) - e, np.conj(gam[m + 1 : n + m]))
        return complex(total)


class SpectralGram(GramEngine):
    """Closed-form kernel evaluation for atomic spectral measures."""

    def __init__(self, model: SpectralAtomsModel):
        super().__init__(model)
        self._thetas, self._weights = model.arrays()

    def sum_norm_sq(self, n: int) -> float:
        if n < 0:
            raise ValueError("n must be >= 0")
        if n == 0 or self._weights.size == 0:
            return 0.0
        return float(self._weights @ kernel_sq_array(self._thetas, n))

    def sum_norm_sq_many(self, ns) -> np.ndarray:
        ns = np.asarray(ns, dtype=np.int64)
        if self._weights.size == 0:
            return np.zeros(ns.shape, dtype=np.float64)
        out = np.empty(ns.shape, dtype=np.float64)
        for i, n in enumerate(ns):
            out[i] = self.sum_norm_sq(int(n))
        return out

    def _cross(self, n: int, m: int) -> complex:
        if self._weights.size == 0:
            return 0.0 + 0.0j
        dn = dirichlet_sum_array(self._thetas, n)
        dnm = dirichlet_sum_array(self._thetas, n + m)
        return complex(self._weights @ (dn * np.conj(dnm)))


class OrbitGram(GramEngine):
    """Forward-walk evaluation of an operator orbit.

    The walk keeps (T^k x0, S_k) and snapshots the state periodically so
    that partial-sum vectors at arbitrary indices can be replayed with the
    same arithmetic (cache results never depend on query order).
    """

    def __init__(self, model: OperatorOrbitModel):
        super().__init__(model)
        self._T = np.asarray(model.T)
        self._norms = [0.0]
        self._pow = model.x0.copy()      # T^k x0 at k = len(_norms) - 1
        self._sum = CompensatedVectorSum(model.dim)
        self._snaps = {0: (model.x0.copy(), self._sum.snapshot())}

    def _advance(self, n: int) -> None:
        T = self._T
        while len(self._norms) <= n:
            self._pow = T @ self._pow
            self._sum.add(self._pow)
            v = self._sum.value
            self._norms.append(float(np.vdot(v, v).real))
            k = len(self._norms) - 1
            if k % _SNAP_EVERY == 0:
                self._snaps[k] = (self._pow.copy(), self._sum.snapshot())

    def sum_norm_sq(self, n: int) -> float:
        if n < 0:
            raise ValueError("n must be >= 0")
        self._advance(n)
        return self._norms[n]

    def sum_norm_sq_many(self, ns) -> np.ndarray:
        ns = np.asarray(ns, dtype=np.int64)
        if ns.size:
            self._advance(int(ns.max()))
        return np.asarray(self._norms)[ns]

    def vector_at(self, n: int) -> np.ndarray:
        """S_n as an explicit vector, replayed from the nearest snapshot."""
        if n == 0:
            return np.zeros(self.model.dim, dtype=np.complex128)
        self._advance(n)
        base = (n // _SNAP_EVERY) * _SNAP_EVERY
        while base not in self._snaps:
            base -= _SNAP_EVERY
        pow_vec, sum_state = self._snaps[base]
        acc = CompensatedVectorSum(self.model.dim)
        acc.restore(sum_state)
        v = pow_vec.copy()
        T = self._T
        for _ in range(base, n):
            v = T @ v
            acc.add(v)
        return acc.value

    def _cross(self, n: int, m: int) -> complex:
        u = self.vector_at(n)
        w = self.vector_at(n + m)
        # <S_n, S_{n+m}> linear in the first argument
        return complex(np.vdot(w, u))
