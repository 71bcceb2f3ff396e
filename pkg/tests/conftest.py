from __future__ import annotations

import numpy as np
import pytest

from kyfanlab import (
    CovarianceModel,
    OperatorOrbitModel,
    SpectralAtomsModel,
)
from kyfanlab.sampling import generator, random_spectral, random_unitary_orbit

PI = np.pi


def stationary_zoo() -> list:
    """A fixed cross-section of stationary models, one per flavor."""
    rng = generator(1234)
    return [
        ("orthonormal", CovarianceModel.orthonormal()),
        ("constant", CovarianceModel.constant()),
        ("ar1(0.5)", CovarianceModel.ar1(0.5)),
        ("ar1(-0.7)", CovarianceModel.ar1(-0.7)),
        ("cosine(1.0)", CovarianceModel.cosine(1.0)),
        (
            "ma-table",
            CovarianceModel.from_table({0: 1.0, 1: 0.4, 2: 0.2}, horizon=4096),
        ),
        ("atom(pi/2)", SpectralAtomsModel.from_atoms([(PI / 2, 1.0)])),
        (
            "half-half",
            SpectralAtomsModel.from_atoms([(0.0, 0.5), (PI, 0.5)]),
        ),
        ("random-atoms", random_spectral(rng, max_atoms=5)),
        (
            "diag(1,i)",
            OperatorOrbitModel(
                T=np.diag([1.0, 1.0j]),
                x0=np.array([np.sqrt(0.5), np.sqrt(0.5)]),
                declared_class="unitary",
            ),
        ),
        ("random-unitary", random_unitary_orbit(rng, max_dim=4)),
    ]


def contraction_zoo() -> list:
    rng = generator(99)
    from kyfanlab.sampling import random_contraction_orbit

    return [
        (
            "scalar(0.5)",
            OperatorOrbitModel(
                T=np.array([[0.5]]), x0=np.array([1.0]), declared_class="contraction"
            ),
        ),
        ("random-contraction", random_contraction_orbit(rng, max_dim=4)),
    ]


@pytest.fixture(scope="session")
def zoo():
    return stationary_zoo()


@pytest.fixture(scope="session")
def contractions():
    return contraction_zoo()
