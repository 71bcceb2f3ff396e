"""Compensated accumulation helpers.

Identity residuals at the 1e-9 scale require that long running sums do not
drift, so the incremental engines accumulate through error-free
transformations (a running double-double) instead of plain ``+=``.
"""

from __future__ import annotations

import numpy as np

_SPLITTER = 134217729.0  # 2^27 + 1, Dekker splitting constant


def two_prod(a, b):
    """Exact product a * b = p + err (Dekker two-product, no FMA needed).

    Works elementwise on arrays.  Large-index angle arguments (h * theta)
    must be split this way: rounding them to one double costs ~1e-12 near
    h*theta ~ 4e3, which triangular Gram sums then amplify past the lab
    tolerance.
    """
    p = a * b
    ca = _SPLITTER * a
    a_hi = ca - (ca - a)
    a_lo = a - a_hi
    cb = _SPLITTER * b
    b_hi = cb - (cb - b)
    b_lo = b - b_hi
    err = ((a_hi * b_hi - p) + a_hi * b_lo + a_lo * b_hi) + a_lo * b_lo
    return p, err


def cos_sin_exact(a, b):
    """cos(a*b) and sin(a*b) with the product split exactly.

    First-order correction in the split residual; the residual is at most
    one ulp of the product, so the truncation error is O(1e-24).
    """
    p, e = two_prod(a, b)
    c = np.cos(p)
    s = np.sin(p)
    return c - s * e, s + c * e


class CompensatedSum:
    """Running sum kept as an unevaluated (hi, lo) pair.

    Each ``add`` performs Knuth's exact two-sum followed by a
    renormalization, so the accumulated error stays at O(n * eps^2).
    """

    __slots__ = ("hi", "lo")

    def __init__(self, value: float = 0.0):
        self.hi = float(value)
        self.lo = 0.0

    def add(self, x: float) -> None:
        s = self.hi + x
        b = s - self.hi
        err = (self.hi - (s - b)) + (x - b)
        lo = self.lo + err
        hi = s + lo
        self.lo = lo - (hi - s)
        self.hi = hi

    @property
    def value(self) -> float:
        return self.hi + self.lo


class CompensatedVectorSum:
    """Vector-valued compensated accumulator (complex dtype).

    Used by the orbit engine so that forward walks of ~1e5 steps keep the
    partial-sum vectors accurate to a few ulps.
    """

    __slots__ = ("hi", "lo")

    def __init__(self, dim: int):
        self.hi = np.zeros(dim, dtype=np.complex128)
        self.lo = np.zeros(dim, dtype=np.complex128)

    def add(self, x: np.ndarray) -> None:
        s = self.hi + x
        b = s - self.hi
        err = (self.hi - (s - b)) + (x - b)
        lo = self.lo + err
        hi = s + lo
        self.lo = lo - (hi - s)
        self.hi = hi

    @property
    def value(self) -> np.ndarray:
        return self.hi + self.lo

    def snapshot(self) -> tuple[np.ndarray, np.ndarray]:
        return self.hi.copy(), self.lo.copy()

    def restore(self, state: tuple[np.ndarray, np.ndarray]) -> None:
        self.hi = state[0].copy()
        self.lo = state[1].copy()
