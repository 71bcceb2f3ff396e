from __future__ import annotations

import math

import numpy as np
import pytest

from kyfanlab import (
    CovarianceModel,
    GramEngine,
    ModelError,
    OperatorOrbitModel,
    SpectralAtomsModel,
    apply_fractional,
    decay_trace,
    membership_series,
)
from kyfanlab.sampling import generator, haar_unitary
from kyfanlab.sums import kernel_sq_array

PI = np.pi


class TestApplyFractional:
    def test_atom_at_pi(self):
        t = apply_fractional(SpectralAtomsModel.from_atoms([(PI, 1.0)]), 0.5)
        assert t.transformed.thetas == (PI,)
        assert t.transformed.weights[0] == pytest.approx(2.0, abs=1e-12)

    def test_atom_at_zero_annihilated(self):
        t = apply_fractional(SpectralAtomsModel.from_atoms([(0.0, 1.0)]), 0.3)
        assert t.transformed.mass == 0.0
        assert len(t.transformed.thetas) == 0

    def test_quarter_turn(self):
        t = apply_fractional(SpectralAtomsModel.from_atoms([(PI / 2, 1.0)]), 0.5)
        assert t.transformed.weights[0] == pytest.approx(math.sqrt(2.0), abs=1e-12)

    def test_alpha_range(self):
        model = SpectralAtomsModel.from_atoms([(1.0, 1.0)])
        for bad in (0.0, 1.0, -0.2, 1.5):
            with pytest.raises(ValueError):
                apply_fractional(model, bad)

    def test_covariance_rejected(self):
        with pytest.raises(ModelError):
            apply_fractional(CovarianceModel.ar1(0.5), 0.5)

    def test_non_normal_rejected(self):
        nilpotent = OperatorOrbitModel(
            T=np.array([[0.0, 1.0], [0.0, 0.0]]),
            x0=np.array([1.0, 0.0]),
            declared_class="contraction",
        )
        with pytest.raises(ModelError, match="normal"):
            apply_fractional(nilpotent, 0.5)

    def test_mass_bound(self):
        rng = generator(5)
        from kyfanlab.sampling import random_spectral

        for _ in range(10):
            model = random_spectral(rng)
            for alpha in (0.25, 0.5, 0.75):
                t = apply_fractional(model, alpha)
                assert t.transformed.mass <= 2 ** (2 * alpha) * model.mass + 1e-12

    def test_orbit_matches_spectral_route(self):
        # diagonal unitary with an atom layout mirrors the spectral multiplier
        thetas = np.array([0.7, -2.0, PI])
        weights = np.array([0.5, 1.0, 0.25])
        orbit = OperatorOrbitModel(
            T=np.diag(np.exp(1j * thetas)),
            x0=np.sqrt(weights).astype(complex),
            declared_class="unitary",
        )
        spectral = SpectralAtomsModel.from_atoms(zip(thetas, weights))
        t_orbit = apply_fractional(orbit, 0.5)
        t_spec = apply_fractional(spectral, 0.5)
        a = GramEngine.for_model(t_orbit.transformed)
        b = GramEngine.for_model(t_spec.transformed)
        for n in (1, 2, 9, 64):
            assert a.sum_norm_sq(n) == pytest.approx(b.sum_norm_sq(n), rel=1e-10)

    def test_composition_property(self):
        rng = generator(17)
        for _ in range(5):
            d = 4
            T = haar_unitary(rng, d)
            x0 = rng.standard_normal(d) + 1j * rng.standard_normal(d)
            model = OperatorOrbitModel(T=T, x0=x0, declared_class="unitary")
            ab = apply_fractional(
                apply_fractional(model, 0.3).transformed, 0.4
            ).transformed
            once = apply_fractional(model, 0.7).transformed
            assert np.allclose(ab.x0, once.x0, atol=1e-10)

    def test_transformed_norm_oracle(self):
        # ||S_n||^2 of the transform equals the directly reweighted kernel sum
        model = SpectralAtomsModel.from_atoms([(0.4, 0.3), (2.2, 1.1), (PI, 0.6)])
        alpha = 0.5
        t = apply_fractional(model, alpha)
        e = GramEngine.for_model(t.transformed)
        thetas, weights = model.arrays()
        mult = (2.0 * np.abs(np.sin(0.5 * thetas))) ** (2 * alpha)
        for n in (1, 3, 17, 200):
            direct = float((weights * mult) @ kernel_sq_array(thetas, n))
            assert e.sum_norm_sq(n) == pytest.approx(direct, rel=1e-12)


class TestDecayTrace:
    def test_atom_at_pi(self):
        t = apply_fractional(SpectralAtomsModel.from_atoms([(PI, 1.0)]), 0.5)
        trace = decay_trace(t, 2 ** 12)
        assert trace.values[0] == pytest.approx(math.sqrt(2.0), abs=1e-12)
        assert all(v <= 1e-12 for v in trace.values[1:])
        assert trace.vanishing

    def test_empty_transform(self):
        t = apply_fractional(SpectralAtomsModel.from_atoms([(0.0, 1.0)]), 0.5)
        trace = decay_trace(t, 256)
        assert all(v == 0.0 for v in trace.values)
        assert trace.vanishing

    def test_quarter_turn_envelope(self):
        t = apply_fractional(SpectralAtomsModel.from_atoms([(PI / 2, 1.0)]), 0.5)
        trace = decay_trace(t, 2 ** 12)
        assert trace.final <= 1e-3
        assert trace.vanishing


class TestMembershipSeries:
    def test_atom_at_pi_converges(self):
        rep = membership_series(SpectralAtomsModel.from_atoms([(PI, 1.0)]), 2 ** 14)
        assert rep.verdict == "converging"
        assert rep.limit_estimate == pytest.approx(PI ** 2 / 8.0, abs=1e-3)

    def test_transformed_value(self):
        t = apply_fractional(SpectralAtomsModel.from_atoms([(PI, 1.0)]), 0.5)
        rep = membership_series(t.transformed, 2 ** 14)
        assert rep.verdict == "converging"
        assert rep.limit_estimate == pytest.approx(PI ** 2 / 4.0, abs=1e-3)

    def test_atom_at_zero_diverges(self):
        rep = membership_series(SpectralAtomsModel.from_atoms([(0.0, 1.0)]), 2 ** 12)
        assert rep.verdict == "diverging"
        # terms are identically one, partial sums grow linearly
        assert rep.partial_sums[-1] == pytest.approx(2 ** 12, rel=1e-12)

    def test_mixed_model_diverges(self):
        model = SpectralAtomsModel.from_atoms([(0.0, 0.2), (PI, 0.8)])
        rep = membership_series(model, 2 ** 12)
        assert rep.verdict == "diverging"

    def test_verdict_consistency_random(self):
        # atoms near +-pi keep the kernel peak small, so the doubling
        # increment resolves "converging" at this horizon; atoms close to
        # zero are legitimately inconclusive at desk scale
        rng = generator(23)
        for _ in range(8):
            count = int(rng.integers(1, 4))
            thetas = rng.uniform(2.5, np.pi - 1e-6, size=count) * rng.choice(
                [-1.0, 1.0], size=count
            )
            weights = rng.uniform(0.1, 1.0, size=count)
            model = SpectralAtomsModel.from_atoms(zip(thetas, weights))
            rep = membership_series(model, 2 ** 15)
            assert rep.verdict == "converging", model.thetas

    def test_near_zero_atom_below_and_above_resolution(self):
        # below n ~ 1/theta the atom is indistinguishable from one at zero;
        # past that scale the increments decay but are not yet resolved
        model = SpectralAtomsModel.from_atoms([(1e-3, 1.0)])
        assert membership_series(model, 2 ** 10).verdict == "diverging"
        assert membership_series(model, 2 ** 15).verdict == "inconclusive"

    def test_partial_sums_nondecreasing(self):
        rep = membership_series(SpectralAtomsModel.from_atoms([(1.3, 0.5)]), 2 ** 10)
        assert all(b >= a for a, b in zip(rep.partial_sums, rep.partial_sums[1:]))
