"""Seeded random model generation.

All randomness flows from a single 64-bit seed through a counter-based
generator (Philox), so sampled corpora are reproducible across runs and
platforms.
"""

from __future__ import annotations

import numpy as np

from .models import (
    CovarianceModel,
    OperatorOrbitModel,
    SpectralAtomsModel,
)


def generator(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(int(seed) & (2 ** 64 - 1)))


def random_spectral(rng: np.random.Generator, max_atoms: int = 8) -> SpectralAtomsModel:
    """Distinct uniform angles with positive weights; valid by construction."""
    count = int(rng.integers(1, max_atoms + 1))
    thetas = rng.uniform(-np.pi, np.pi, size=count)
    weights = rng.uniform(0.1, 2.0, size=count)
    return SpectralAtomsModel.from_atoms(zip(thetas, weights))


def random_ar1(rng: np.random.Generator) -> CovarianceModel:
    return CovarianceModel.ar1(float(rng.uniform(-0.95, 0.95)))


def random_cosine(rng: np.random.Generator) -> CovarianceModel:
    return CovarianceModel.cosine(float(rng.uniform(-np.pi, np.pi)))


def haar_unitary(rng: np.random.Generator, dim: int) -> np.ndarray:
    """Haar-distributed unitary via QR with the standard phase fix."""
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim)))
    q, r = np.linalg.qr(z / np.sqrt(2.0))
    diag = np.diag(r)
    return q * (diag / np.abs(diag))


def random_unitary_orbit(
    rng: np.random.Generator, max_dim: int = 8, fixed_dim: int | None = None
) -> OperatorOrbitModel:
    """Random unitary orbit; ``fixed_dim`` forces that many eigenvalues to 1
    (a nontrivial fixed space) before conjugating by a Haar unitary."""
    d = int(rng.integers(1, max_dim + 1))
    if fixed_dim is not None:
        d = max(d, fixed_dim + 1)
    T = haar_unitary(rng, d)
    if fixed_dim:
        phases = np.exp(1j * rng.uniform(0.3, 2 * np.pi - 0.3, size=d - fixed_dim))
        lam = np.concatenate([np.ones(fixed_dim), phases])
        Q = haar_unitary(rng, d)
        T = Q @ np.diag(lam) @ Q.conj().T
    x0 = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return OperatorOrbitModel(T=T, x0=x0, declared_class="unitary")


def random_contraction_orbit(
    rng: np.random.Generator, max_dim: int = 8
) -> OperatorOrbitModel:
    """Strict contraction: a Haar unitary scaled below 1 on each singular
    direction."""
    d = int(rng.integers(1, max_dim + 1))
    u = haar_unitary(rng, d)
    v = haar_unitary(rng, d)
    sing = rng.uniform(0.1, 0.999, size=d)
    T = u @ np.diag(sing) @ v.conj().T
    x0 = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return OperatorOrbitModel(T=T, x0=x0, declared_class="contraction")


FAMILY_SAMPLERS = {
    "ar1": random_ar1,
    "cosine": random_cosine,
    "spectral": random_spectral,
    "unitary": random_unitary_orbit,
    "contraction": random_contraction_orbit,
}
