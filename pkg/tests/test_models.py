from __future__ import annotations

import math

import numpy as np
import pytest

from kyfanlab import (
    CovarianceModel,
    ModelError,
    OperatorOrbitModel,
    SpectralAtomsModel,
    StationarityError,
    covariance_of,
    model_from_dict,
    model_to_dict,
    to_covariance,
    validate,
)
from kyfanlab.models import normalize_angle
from kyfanlab.sampling import generator, random_spectral

PI = np.pi


def toeplitz_min_eig(model, n):
    gam = np.array(
        [covariance_of(to_covariance(model, max(n, 1)), h) for h in range(n)]
        if model.kind != "covariance"
        else [covariance_of(model, h) for h in range(n)]
    )
    diff = np.subtract.outer(np.arange(n), np.arange(n))
    M = gam[np.abs(diff)]
    M = np.where(diff < 0, np.conj(M), M)
    return float(np.linalg.eigvalsh(M)[0])


class TestValidate:
    def test_ar1_window_64_passes(self):
        model = CovarianceModel.ar1(0.5)
        report = validate(model, psd_window=64)
        assert report.passed
        # eigen oracle: strictly positive definite
        assert toeplitz_min_eig(model, 64) > 0.0

    def test_constant_rank_one(self):
        report = validate(CovarianceModel.constant(), psd_window=8)
        assert report.passed
        assert abs(toeplitz_min_eig(CovarianceModel.constant(), 8)) < 1e-12

    def test_ma_like_table_psd_boundary(self):
        # gamma = (1, .9, .9) is PSD at window 3 (eigenvalues .1, .1, 2.8)
        # and first turns indefinite at window 4.
        model = CovarianceModel.from_table({0: 1.0, 1: 0.9, 2: 0.9}, horizon=8)
        assert validate(model, psd_window=3).passed
        report = validate(model, psd_window=4)
        assert not report.passed
        assert toeplitz_min_eig(model, 3) > 0.0
        assert toeplitz_min_eig(model, 4) < -0.1

    def test_random_spectral_always_valid(self):
        rng = generator(7)
        for _ in range(20):
            assert validate(random_spectral(rng), psd_window=32).passed

    def test_unitary_orbit(self):
        model = OperatorOrbitModel(
            T=np.diag([1.0, 1.0j]), x0=np.array([1.0, 1.0]), declared_class="unitary"
        )
        assert validate(model).passed

    def test_contraction_orbit(self):
        ok = OperatorOrbitModel(
            T=0.8 * np.eye(2), x0=np.array([1.0, 0.0]), declared_class="contraction"
        )
        assert validate(ok).passed
        expanding = OperatorOrbitModel(
            T=1.5 * np.eye(2), x0=np.array([1.0, 0.0]), declared_class="contraction"
        )
        report = validate(expanding)
        assert not report.passed
        assert "2-norm" in report.checks[0].detail

    def test_declared_unitary_that_is_not(self):
        model = OperatorOrbitModel(
            T=0.5 * np.eye(2), x0=np.array([1.0, 0.0]), declared_class="unitary"
        )
        assert not validate(model).passed

    def test_window_must_be_positive(self):
        with pytest.raises(ValueError):
            validate(CovarianceModel.constant(), psd_window=0)


class TestRejection:
    def test_ar1_rho_out_of_range(self):
        with pytest.raises(ModelError) as err:
            CovarianceModel.ar1(1.0)
        assert err.value.field == "rho"

    def test_negative_weight(self):
        with pytest.raises(ModelError) as err:
            SpectralAtomsModel.from_atoms([(0.3, -1.0)])
        assert "weight" in err.value.field

    def test_duplicate_angles(self):
        with pytest.raises(ModelError):
            SpectralAtomsModel.from_atoms([(0.3, 1.0), (0.3, 2.0)])

    def test_non_square_operator(self):
        with pytest.raises(ModelError) as err:
            OperatorOrbitModel(
                T=np.ones((2, 3)), x0=np.ones(2), declared_class="unitary"
            )
        assert err.value.field == "T"

    def test_dimension_mismatch(self):
        with pytest.raises(ModelError):
            OperatorOrbitModel(T=np.eye(2), x0=np.ones(3), declared_class="unitary")

    def test_table_complex_gamma0(self):
        with pytest.raises(ModelError):
            CovarianceModel.from_table({0: [1.0, 0.5]})

    def test_table_hermitian_conflict(self):
        with pytest.raises(ModelError):
            CovarianceModel.from_table({1: [0.0, 1.0], -1: [0.0, 1.0], 0: 1.0})

    def test_table_hermitian_fold(self):
        model = CovarianceModel.from_table({0: 1.0, -1: [0.0, 1.0]})
        assert model.gamma(1) == -1.0j
        assert model.gamma(-1) == 1.0j


class TestCovarianceOf:
    def test_atom_at_pi(self):
        model = SpectralAtomsModel.from_atoms([(PI, 1.0)])
        assert covariance_of(model, 3) == pytest.approx(-1.0, abs=1e-12)

    def test_lag_zero_is_mass(self, zoo):
        for label, model in zoo:
            got = covariance_of(model, 0)
            assert got.imag == pytest.approx(0.0, abs=1e-9), label
            assert got.real == pytest.approx(model.mass, rel=1e-12), label

    def test_two_atoms(self):
        model = SpectralAtomsModel.from_atoms([(0.0, 0.5), (PI, 0.5)])
        assert covariance_of(model, 2) == pytest.approx(1.0, abs=1e-12)

    def test_diagonal_unitary(self):
        model = OperatorOrbitModel(
            T=np.diag([1.0, 1.0j]),
            x0=np.array([np.sqrt(0.5), np.sqrt(0.5)]),
            declared_class="unitary",
        )
        for h in range(-5, 6):
            expect = 0.5 + 0.5 * (1.0j) ** h
            assert covariance_of(model, h) == pytest.approx(expect, abs=1e-12)

    def test_contraction_rejected(self):
        model = OperatorOrbitModel(
            T=np.array([[0.5]]), x0=np.array([1.0]), declared_class="contraction"
        )
        with pytest.raises(StationarityError, match="covariance undefined"):
            covariance_of(model, 1)

    def test_hermitian_symmetry(self, zoo):
        for label, model in zoo:
            if not model.stationary:
                continue
            for h in (1, 2, 7):
                a = covariance_of(model, h)
                b = covariance_of(model, -h)
                assert b == pytest.approx(a.conjugate(), abs=1e-10), label


class TestToCovariance:
    def test_atom_at_zero_gives_constant(self):
        table = to_covariance(SpectralAtomsModel.from_atoms([(0.0, 1.0)]), horizon=16)
        for h in range(17):
            assert table.gamma(h) == pytest.approx(1.0, abs=1e-12)

    def test_quarter_turn_atom(self):
        table = to_covariance(SpectralAtomsModel.from_atoms([(PI / 2, 1.0)]), horizon=4)
        assert table.gamma(1) == pytest.approx(1.0j, abs=1e-12)

    def test_agreement_with_source(self, zoo):
        for label, model in zoo:
            if model.kind == "covariance" or not model.stationary:
                continue
            table = to_covariance(model, horizon=32)
            for h in range(33):
                want = covariance_of(model, h)
                got = table.gamma(h)
                assert got == pytest.approx(want, abs=1e-12 * max(1.0, abs(want))), label

    def test_contraction_rejected(self):
        model = OperatorOrbitModel(
            T=np.array([[0.5]]), x0=np.array([1.0]), declared_class="contraction"
        )
        with pytest.raises(StationarityError):
            to_covariance(model, horizon=4)

    def test_horizon_positive(self):
        with pytest.raises(ValueError):
            to_covariance(SpectralAtomsModel.from_atoms([(1.0, 1.0)]), horizon=0)


class TestGramPsd:
    def test_reconstructed_gram_is_psd(self, zoo):
        for label, model in zoo:
            if not model.stationary:
                continue
            if model.kind == "covariance" and model.max_lag is not None:
                continue  # table horizon caps the window
            for n in (16, 64, 256):
                min_eig = toeplitz_min_eig(model, n)
                assert min_eig >= -1e-10 * n * model.mass, (label, n)


class TestJsonSchema:
    def test_round_trip(self, zoo):
        for label, model in zoo:
            d = model_to_dict(model)
            back = model_from_dict(d)
            assert model_to_dict(back) == d, label

    def test_unknown_top_field_rejected(self):
        with pytest.raises(ModelError, match="unknown field"):
            model_from_dict({"type": "spectral", "atoms": [], "extra": 1})

    def test_unknown_atom_field_rejected(self):
        with pytest.raises(ModelError, match="unknown field"):
            model_from_dict(
                {"type": "spectral", "atoms": [{"theta": 1.0, "weight": 1.0, "x": 2}]}
            )

    def test_complex_entries(self):
        model = model_from_dict(
            {
                "type": "orbit",
                "T": [[[0.0, 1.0]]],
                "x0": [1.0],
                "class": "unitary",
            }
        )
        assert model.T[0, 0] == 1.0j

    def test_normative_examples(self):
        m1 = model_from_dict({"type": "covariance", "family": "ar1", "rho": 0.5})
        assert m1.rho == 0.5
        m2 = model_from_dict(
            {"type": "covariance", "table": {"0": 1.0, "1": 0.5}, "horizon": 64}
        )
        assert m2.horizon == 64
        assert m2.gamma(7) == 0.0
        m3 = model_from_dict(
            {"type": "spectral", "atoms": [{"theta": 3.141592653589793, "weight": 1.0}]}
        )
        assert m3.mass == 1.0


def test_normalize_angle():
    assert normalize_angle(PI) == pytest.approx(PI)
    assert normalize_angle(-PI) == pytest.approx(PI)
    assert normalize_angle(3 * PI) == pytest.approx(PI)
    assert normalize_angle(0.0) == 0.0
    assert -PI < normalize_angle(2.5 * PI) <= PI


def test_mass_definitions(zoo):
    for label, model in zoo:
        assert math.isfinite(model.mass), label
        assert model.mass > 0.0, label
