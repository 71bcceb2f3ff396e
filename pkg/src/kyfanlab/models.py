"""Concrete representations of weakly stationary (or contraction-driven)
sequences.

Three interchangeable model kinds are supported:

* ``CovarianceModel``   - the sequence is described by its covariance
  function gamma(h) = <X_{j+h}, X_j>, either a named closed-form family or
  an explicit table with a finite horizon.
* ``SpectralAtomsModel`` - an atomic measure on (-pi, pi]; partial-sum norms
  are kernel integrals against it.
* ``OperatorOrbitModel`` - X_i = T^i x0 for a square matrix T declared
  unitary (weakly stationary) or a contraction (increment-dominated).

Inner products are linear in the first argument: <a, b> = sum_j a_j
conj(b_j).  With that convention all three kinds agree on
gamma(h) = sum_j w_j e^{i h theta_j} for the spectral form.
"""

from __future__ import annotations

import functools
import json
import hashlib
import math
from dataclasses import dataclass
from typing import Mapping, Sequence, Union

import numpy as np

from .errors import HorizonError, ModelError, StationarityError
from .summation import cos_sin_exact

FAMILIES = ("orthonormal", "constant", "ar1", "cosine")

#: slack for the unitarity / contraction matrix checks
OPERATOR_TOL = 1e-9
#: relative slack per PSD window: min eigenvalue >= -PSD_RTOL * window * gamma(0)
PSD_RTOL = 1e-10


def normalize_angle(theta: float) -> float:
    """Map an angle to the half-open interval (-pi, pi]."""
    t = math.remainder(float(theta), 2.0 * math.pi)
    if t <= -math.pi:
        t += 2.0 * math.pi
    return t


def _as_complex(value, field: str) -> complex:
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, complex):
        return value
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return complex(float(value[0]), float(value[1]))
    raise ModelError(field, f"expected number or [re, im] pair, got {value!r}")


@dataclass(frozen=True)
class CovarianceModel:
    """Covariance description gamma(h), Hermitian by construction.

    ``family`` selects a closed-form gamma; ``table`` stores gamma(0..horizon)
    with unspecified lags inside the horizon equal to zero.  Lags beyond the
    horizon are an error, never silently extrapolated.
    """

    family: str | None = None
    rho: float = 0.0
    theta0: float = 0.0
    table: tuple | None = None
    horizon: int | None = None

    kind = "covariance"
    stationary = True

    @classmethod
    def orthonormal(cls) -> "CovarianceModel":
        return cls(family="orthonormal")

    @classmethod
    def constant(cls) -> "CovarianceModel":
        return cls(family="constant")

    @classmethod
    def ar1(cls, rho: float) -> "CovarianceModel":
        rho = float(rho)
        if not math.isfinite(rho) or abs(rho) >= 1.0:
            raise ModelError("rho", f"ar1 requires |rho| < 1, got {rho}")
        return cls(family="ar1", rho=rho)

    @classmethod
    def cosine(cls, theta0: float) -> "CovarianceModel":
        t = float(theta0)
        if not math.isfinite(t):
            raise ModelError("theta0", "cosine frequency must be finite")
        return cls(family="cosine", theta0=normalize_angle(t))

    @classmethod
    def from_table(
        cls,
        entries: Union[Mapping, Sequence],
        horizon: int | None = None,
    ) -> "CovarianceModel":
        """Build a table model from ``{lag: value}`` or ``[gamma0, gamma1, ...]``.

        Negative lags are folded by Hermitian symmetry; an inconsistent pair
        gamma(-h) != conj(gamma(h)) is rejected.
        """
        if isinstance(entries, Mapping):
            items = {}
            for key, value in entries.items():
                try:
                    h = int(key)
                except (TypeError, ValueError):
                    raise ModelError("table", f"lag key {key!r} is not an integer")
                items[h] = _as_complex(value, f"table[{key}]")
        else:
            items = {h: _as_complex(v, f"table[{h}]") for h, v in enumerate(entries)}

        max_given = max((abs(h) for h in items), default=0)
        if horizon is None:
            horizon = max_given
        horizon = int(horizon)
        if horizon < 0:
            raise ModelError("horizon", "horizon must be >= 0")
        if max_given > horizon:
            raise ModelError("table", f"lag {max_given} exceeds horizon {horizon}")

        dense = np.zeros(horizon + 1, dtype=np.complex128)
        for h, v in items.items():
            if h >= 0:
                dense[h] = v
        for h, v in items.items():
            if h < 0:
                folded = np.conj(v)
                if -h in items and abs(items[-h] - folded) > 1e-12 * max(1.0, abs(v)):
                    raise ModelError(
                        "table",
                        f"gamma({h}) != conj(gamma({-h})): Hermitian symmetry violated",
                    )
                dense[-h] = folded
        if abs(dense[0].imag) > 0.0:
            raise ModelError("table", "gamma(0) must be real")
        return cls(table=tuple(complex(v) for v in dense), horizon=horizon)

    @property
    def max_lag(self) -> int | None:
        """Largest lag the model can answer; ``None`` means unbounded."""
        return self.horizon if self.table is not None else None

    def gamma(self, h: int) -> complex:
        a = abs(int(h))
        if self.family == "orthonormal":
            val = complex(1.0 if a == 0 else 0.0)
        elif self.family == "constant":
            val = complex(1.0)
        elif self.family == "ar1":
            val = complex(self.rho ** a)
        elif self.family == "cosine":
            val = complex(float(cos_sin_exact(float(a), self.theta0)[0]))
        else:
            if a > self.horizon:
                raise HorizonError(f"lag {a} beyond table horizon {self.horizon}")
            val = self.table[a]
        return val if h >= 0 else val.conjugate()

    def gamma_array(self, hmax: int) -> np.ndarray:
        """gamma(0..hmax) as a complex vector."""
        h = np.arange(hmax + 1)
        if self.family == "orthonormal":
            out = np.zeros(hmax + 1, dtype=np.complex128)
            out[0] = 1.0
            return out
        if self.family == "constant":
            return np.ones(hmax + 1, dtype=np.complex128)
        if self.family == "ar1":
            return (self.rho ** h).astype(np.complex128)
        if self.family == "cosine":
            cos_vals, _ = cos_sin_exact(h.astype(np.float64), self.theta0)
            return cos_vals.astype(np.complex128)
        if hmax > self.horizon:
            raise HorizonError(f"lag {hmax} beyond table horizon {self.horizon}")
        return np.asarray(self.table[: hmax + 1], dtype=np.complex128)

    @property
    def mass(self) -> float:
        return self.gamma(0).real

    def describe(self) -> str:
        if self.family == "ar1":
            return f"covariance:ar1(rho={self.rho})"
        if self.family == "cosine":
            return f"covariance:cosine(theta0={self.theta0})"
        if self.family is not None:
            return f"covariance:{self.family}"
        return f"covariance:table(horizon={self.horizon})"


@dataclass(frozen=True)
class SpectralAtomsModel:
    """Finite atomic spectral measure: pairs (theta_j, w_j), w_j > 0.

    The empty measure is permitted and represents the zero sequence (it
    arises as the image of a pure fixed-space model under the fractional
    difference transform).
    """

    thetas: tuple = ()
    weights: tuple = ()

    kind = "spectral"
    stationary = True

    @classmethod
    def from_atoms(cls, atoms: Sequence[tuple]) -> "SpectralAtomsModel":
        pairs = []
        for i, (theta, weight) in enumerate(atoms):
            t = float(theta)
            w = float(weight)
            if not math.isfinite(t):
                raise ModelError(f"atoms[{i}].theta", "angle must be finite")
            if not math.isfinite(w) or w <= 0.0:
                raise ModelError(f"atoms[{i}].weight", f"weight must be > 0, got {w}")
            pairs.append((normalize_angle(t), w))
        pairs.sort(key=lambda p: p[0])
        for (t1, _), (t2, _) in zip(pairs, pairs[1:]):
            if t1 == t2:
                raise ModelError("atoms", f"duplicate angle {t1} after normalization")
        return cls(
            thetas=tuple(p[0] for p in pairs),
            weights=tuple(p[1] for p in pairs),
        )

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        return (
            np.asarray(self.thetas, dtype=np.float64),
            np.asarray(self.weights, dtype=np.float64),
        )

    def gamma(self, h: int) -> complex:
        total = 0.0 + 0.0j
        for t, w in zip(self.thetas, self.weights):
            c, s = cos_sin_exact(float(h), t)
            total += w * complex(float(c), float(s))
        return total

    @property
    def mass(self) -> float:
        return math.fsum(self.weights)

    def describe(self) -> str:
        return f"spectral[{len(self.thetas)} atoms]"


@dataclass(frozen=True, eq=False)
class OperatorOrbitModel:
    """Orbit model X_i = T^i x0.

    ``declared_class`` fixes the standing hypothesis the model claims:
    "unitary" (weakly stationary) or "contraction" (increment domination).
    """

    T: np.ndarray
    x0: np.ndarray
    declared_class: str = "unitary"

    kind = "orbit"

    def __post_init__(self):
        T = np.array(self.T, dtype=np.complex128)
        x0 = np.array(self.x0, dtype=np.complex128)
        if T.ndim != 2 or T.shape[0] != T.shape[1]:
            raise ModelError("T", f"operator must be square, got shape {T.shape}")
        if x0.ndim != 1 or x0.shape[0] != T.shape[0]:
            raise ModelError("x0", f"vector length {x0.shape} does not match T {T.shape}")
        if not np.all(np.isfinite(T.view(np.float64))):
            raise ModelError("T", "operator entries must be finite")
        if not np.all(np.isfinite(x0.view(np.float64))):
            raise ModelError("x0", "vector entries must be finite")
        if self.declared_class not in ("unitary", "contraction"):
            raise ModelError("class", f"unknown class {self.declared_class!r}")
        T.setflags(write=False)
        x0.setflags(write=False)
        object.__setattr__(self, "T", T)
        object.__setattr__(self, "x0", x0)

    @property
    def stationary(self) -> bool:
        return self.declared_class == "unitary"

    @property
    def dim(self) -> int:
        return self.T.shape[0]

    @property
    def mass(self) -> float:
        # ||X_1||^2 = ||T x0||^2; equals ||x0||^2 in the unitary case
        v = self.T @ self.x0
        return float(np.vdot(v, v).real)

    def describe(self) -> str:
        return f"orbit:{self.declared_class}(d={self.dim})"


Model = Union[CovarianceModel, SpectralAtomsModel, OperatorOrbitModel]


# ---------------------------------------------------------------------------
# validation


@dataclass(frozen=True)
class InvariantCheck:
    name: str
    passed: bool
    slack: float
    threshold: float
    detail: str = ""

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "slack": self.slack,
            "threshold": self.threshold,
            "detail": self.detail,
        }


@dataclass(frozen=True)
class ValidationReport:
    model: str
    kind: str
    checks: tuple

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def worst_slack(self) -> float:
        return min((c.slack for c in self.checks), default=0.0)

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "kind": self.kind,
            "passed": self.passed,
            "checks": [c.to_dict() for c in self.checks],
        }


def _psd_windows(psd_window: int) -> list[int]:
    if psd_window <= 128:
        return list(range(1, psd_window + 1))
    windows = list(range(1, 129))
    w = 256
    while w < psd_window:
        windows.append(w)
        w *= 2
    windows.append(psd_window)
    return windows


def _validate_covariance(model: CovarianceModel, psd_window: int) -> list[InvariantCheck]:
    checks = []
    g0 = model.gamma(0)
    checks.append(
        InvariantCheck(
            name="gamma0-real-nonnegative",
            passed=abs(g0.imag) == 0.0 and g0.real >= 0.0,
            slack=g0.real,
            threshold=0.0,
            detail=f"gamma(0) = {g0}",
        )
    )

    # Hermitian symmetry gamma(-h) = conj(gamma(h)); measured on reachable lags
    hmax = psd_window - 1
    if model.max_lag is not None:
        hmax = min(hmax, model.max_lag)
    herm = 0.0
    for h in range(1, hmax + 1):
        herm = max(herm, abs(model.gamma(-h) - model.gamma(h).conjugate()))
    checks.append(
        InvariantCheck(
            name="hermitian-symmetry",
            passed=herm <= 1e-12 * max(1.0, abs(g0)),
            slack=1e-12 * max(1.0, abs(g0)) - herm,
            threshold=0.0,
            detail=f"max |gamma(-h) - conj(gamma(h))| = {herm:g} over |h| <= {hmax}",
        )
    )

    # PSD at every tested window, with scale-aware slack per window
    worst = math.inf
    worst_window = 0
    worst_eig = math.inf
    limit = psd_window
    if model.max_lag is not None:
        limit = min(psd_window, model.max_lag + 1)
    gam = model.gamma_array(limit - 1) if limit >= 1 else np.zeros(1, complex)
    for n in _psd_windows(limit):
        idx = np.abs(np.subtract.outer(np.arange(n), np.arange(n)))
        toe = gam[idx]
        toe = np.where(
            np.subtract.outer(np.arange(n), np.arange(n)) < 0, np.conj(toe), toe
        )
        min_eig = float(np.linalg.eigvalsh(toe)[0]) if n > 1 else float(toe[0, 0].real)
        slack = min_eig + PSD_RTOL * n * max(g0.real, 0.0)
        if slack < worst:
            worst, worst_window, worst_eig = slack, n, min_eig
    checks.append(
        InvariantCheck(
            name="toeplitz-psd",
            passed=worst >= 0.0,
            slack=worst,
            threshold=0.0,
            detail=f"min eigenvalue {worst_eig:g} at window {worst_window} "
            f"(tested up to {limit})",
        )
    )
    return checks


def _validate_spectral(model: SpectralAtomsModel) -> list[InvariantCheck]:
    thetas, weights = model.arrays()
    checks = [
        InvariantCheck(
            name="weights-positive",
            passed=bool(np.all(weights > 0.0)) if weights.size else True,
            slack=float(weights.min()) if weights.size else 0.0,
            threshold=0.0,
            detail=f"{weights.size} atoms",
        )
    ]
    gap = float(np.diff(thetas).min()) if thetas.size > 1 else math.inf
    checks.append(
        InvariantCheck(
            name="angles-distinct",
            passed=gap > 0.0,
            slack=gap if math.isfinite(gap) else 0.0,
            threshold=0.0,
            detail=f"min angle gap {gap:g}",
        )
    )
    mass = model.mass
    checks.append(
        InvariantCheck(
            name="total-mass-finite",
            passed=math.isfinite(mass),
            slack=mass,
            threshold=0.0,
            detail=f"||X_1||^2 = {mass:g}",
        )
    )
    return checks


def _validate_orbit(model: OperatorOrbitModel) -> list[InvariantCheck]:
    T = model.T
    if model.declared_class == "unitary":
        dev = float(np.abs(T.conj().T @ T - np.eye(model.dim)).max())
        return [
            InvariantCheck(
                name="unitary",
                passed=dev <= OPERATOR_TOL,
                slack=OPERATOR_TOL - dev,
                threshold=OPERATOR_TOL,
                detail=f"max |T*T - I| = {dev:g}",
            )
        ]
    opnorm = float(np.linalg.norm(T, 2))
    return [
        InvariantCheck(
            name="contraction",
            passed=opnorm <= 1.0 + OPERATOR_TOL,
            slack=1.0 + OPERATOR_TOL - opnorm,
            threshold=OPERATOR_TOL,
            detail=f"operator 2-norm = {opnorm:.12g}",
        )
    ]


def validate(model: Model, psd_window: int = 64) -> ValidationReport:
    """Measure every standing invariant of ``model`` and report slack.

    ``psd_window`` bounds the Toeplitz windows tested for covariance models.
    """
    if psd_window < 1:
        raise ValueError("psd_window must be >= 1")
    if model.kind == "covariance":
        checks = _validate_covariance(model, psd_window)
    elif model.kind == "spectral":
        checks = _validate_spectral(model)
    else:
        checks = _validate_orbit(model)
    return ValidationReport(
        model=model_id(model), kind=model.kind, checks=tuple(checks)
    )


# ---------------------------------------------------------------------------
# cross-model conversions


def covariance_of(model: Model, h: int) -> complex:
    """The covariance <X_{j+h}, X_j> of a weakly stationary model."""
    if model.kind in ("covariance", "spectral"):
        return model.gamma(h)
    if not model.stationary:
        raise StationarityError("not stationary: covariance undefined")
    a = abs(int(h))
    v = model.T @ model.x0
    w = v.copy()
    for _ in range(a):
        w = model.T @ w
    # <T^{1+h} x0, T x0> with the first-argument-linear convention
    val = complex(np.vdot(v, w))
    return val if h >= 0 else val.conjugate()


def to_covariance(model: Model, horizon: int) -> CovarianceModel:
    """Covariance-table image of a spectral or unitary-orbit model."""
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    if model.kind == "covariance":
        return model
    if model.kind == "spectral":
        thetas, weights = model.arrays()
        h = np.arange(horizon + 1, dtype=np.float64)
        gam = np.zeros(horizon + 1, dtype=np.complex128)
        for t, w in zip(thetas, weights):
            c, s = cos_sin_exact(h, float(t))
            gam += w * (c + 1j * s)
        return CovarianceModel(table=tuple(map(complex, gam)), horizon=horizon)
    if not model.stationary:
        raise StationarityError("not stationary: covariance undefined")
    v = model.T @ model.x0
    gam = np.empty(horizon + 1, dtype=np.complex128)
    w = v.copy()
    gam[0] = np.vdot(v, w)
    for h in range(1, horizon + 1):
        w = model.T @ w
        gam[h] = np.vdot(v, w)
    if abs(gam[0].imag) > 1e-12 * max(1.0, abs(gam[0])):
        raise ModelError("T", "orbit covariance gamma(0) is not real")
    gam[0] = gam[0].real
    return CovarianceModel(table=tuple(map(complex, gam)), horizon=horizon)


# ---------------------------------------------------------------------------
# JSON schema


def _complex_out(z: complex):
    return z.real if z.imag == 0.0 else [z.real, z.imag]


def model_to_dict(model: Model) -> dict:
    if model.kind == "covariance":
        if model.family == "ar1":
            return {"type": "covariance", "family": "ar1", "rho": model.rho}
        if model.family == "cosine":
            return {"type": "covariance", "family": "cosine", "theta0": model.theta0}
        if model.family is not None:
            return {"type": "covariance", "family": model.family}
        return {
            "type": "covariance",
            "table": {str(h): _complex_out(v) for h, v in enumerate(model.table)},
            "horizon": model.horizon,
        }
    if model.kind == "spectral":
        return {
            "type": "spectral",
            "atoms": [
                {"theta": t, "weight": w}
                for t, w in zip(model.thetas, model.weights)
            ],
        }
    return {
        "type": "orbit",
        "T": [[_complex_out(z) for z in row] for row in model.T],
        "x0": [_complex_out(z) for z in model.x0],
        "class": model.declared_class,
    }


def _require_fields(d: Mapping, allowed: set, context: str) -> None:
    unknown = set(d) - allowed
    if unknown:
        raise ModelError(context, f"unknown field(s): {sorted(unknown)}")


def model_from_dict(d: Mapping) -> Model:
    """Parse the normative model JSON schema; unknown fields are rejected."""
    if not isinstance(d, Mapping):
        raise ModelError("model", "model spec must be a JSON object")
    kind = d.get("type")
    if kind == "covariance":
        _require_fields(d, {"type", "family", "rho", "theta0", "table", "horizon"}, "model")
        if "family" in d and "table" in d:
            raise ModelError("model", "give either family or table, not both")
        if "family" in d:
            fam = d["family"]
            if fam == "orthonormal":
                return CovarianceModel.orthonormal()
            if fam == "constant":
                return CovarianceModel.constant()
            if fam == "ar1":
                if "rho" not in d:
                    raise ModelError("rho", "ar1 requires rho")
                return CovarianceModel.ar1(d["rho"])
            if fam == "cosine":
                if "theta0" not in d:
                    raise ModelError("theta0", "cosine requires theta0")
                return CovarianceModel.cosine(d["theta0"])
            raise ModelError("family", f"unknown family {fam!r}")
        if "table" in d:
            return CovarianceModel.from_table(d["table"], d.get("horizon"))
        raise ModelError("model", "covariance needs family or table")
    if kind == "spectral":
        _require_fields(d, {"type", "atoms"}, "model")
        atoms = d.get("atoms")
        if not isinstance(atoms, Sequence):
            raise ModelError("atoms", "atoms must be a list")
        pairs = []
        for i, a in enumerate(atoms):
            _require_fields(a, {"theta", "weight"}, f"atoms[{i}]")
            if "theta" not in a or "weight" not in a:
                raise ModelError(f"atoms[{i}]", "atom needs theta and weight")
            pairs.append((a["theta"], a["weight"]))
        return SpectralAtomsModel.from_atoms(pairs)
    if kind == "orbit":
        _require_fields(d, {"type", "T", "x0", "class"}, "model")
        if "T" not in d or "x0" not in d:
            raise ModelError("model", "orbit needs T and x0")
        T = [[_as_complex(z, "T") for z in row] for row in d["T"]]
        x0 = [_as_complex(z, "x0") for z in d["x0"]]
        return OperatorOrbitModel(
            T=np.array(T), x0=np.array(x0), declared_class=d.get("class", "unitary")
        )
    raise ModelError("type", f"unknown model type {kind!r}")


def model_digest(model: Model) -> str:
    payload = json.dumps(model_to_dict(model), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode()).hexdigest()[:12]


@functools.lru_cache(maxsize=4096)
def model_id(model: Model) -> str:
    # models are immutable, so the id can be memoized (orbit models hash by
    # identity, the other kinds by value)
    return f"{model.describe()}#{model_digest(model)}"
