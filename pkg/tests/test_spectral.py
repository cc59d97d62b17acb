import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cglwave.errors import ConfigurationError, RegimeViolation
from cglwave.spectral import (
    PHYSICAL,
    SPECTRAL,
    Field,
    GridSpec,
    PerturbationParams,
    VectorField,
    band_limited_random,
    derivative,
    divergence,
    dk_square_array,
    gamma_seminorm_array,
    gl_energy_array,
    gradient,
    laplacian,
    linf_norm,
    sobolev_norm,
    sobolev_norm_array,
    transform,
)


class TestGridSpec:
    def test_shape_and_spacing(self):
        g = GridSpec(2, 32, 4.0)
        assert g.shape == (32, 32)
        assert g.size == 1024
        assert g.spacing == pytest.approx(0.125)
        assert g.cell_volume == pytest.approx(0.015625)

    @pytest.mark.parametrize("dim,n,L", [(3, 32, 1.0), (1, 24, 1.0), (1, 8, 1.0), (1, 32, 0.0)])
    def test_rejects_bad_grids(self, dim, n, L):
        with pytest.raises(ConfigurationError):
            GridSpec(dim, n, L)

    def test_all_problems_reported(self):
        with pytest.raises(ConfigurationError) as info:
            GridSpec(3, 24, -1.0)
        assert len(info.value.violations) == 3

    def test_dealias_mask_two_thirds(self):
        g = GridSpec(1, 128)
        kept = np.abs(g.mode_indices[0]) <= 42
        np.testing.assert_array_equal(g.dealias_mask, kept)
        assert g.dealias_mask.sum() == 85

    def test_nyquist_dropped_for_odd_derivatives(self):
        g = GridSpec(1, 16)
        assert g.wavenumbers_odd[0][8] == 0.0
        assert g.wavenumbers[0][8] != 0.0

    def test_parseval(self, grid1):
        rng = np.random.default_rng(3)
        f = rng.standard_normal(grid1.shape)
        assert np.sum(np.abs(grid1.fft(f)) ** 2) == pytest.approx(np.sum(f ** 2), rel=1e-13)


class TestParams:
    def test_nu_and_thresholds(self):
        p = PerturbationParams(0.2, 0.1)
        assert p.nu == pytest.approx(0.5)
        assert p.small_threshold == pytest.approx(math.sqrt(3 / 8) * 0.5)
        assert p.high_threshold == pytest.approx(5.0)

    def test_eps_message(self):
        with pytest.raises(ConfigurationError, match=r"eps must be in \(0,1\]"):
            PerturbationParams(0.0, 0.1)

    def test_dimension_check(self):
        with pytest.raises(ConfigurationError):
            PerturbationParams(0.1, 0.1, 2).check_dimension(2)
        PerturbationParams(0.1, 0.1, 3).check_dimension(2)


class TestDerivatives:
    def test_sine_derivatives_exact(self, grid1):
        (x,) = grid1.coordinates()
        k = 2 * np.pi * 5 / grid1.period
        f = np.sin(k * x)
        np.testing.assert_allclose(gradient(grid1, f)[0], k * np.cos(k * x), atol=1e-12)
        np.testing.assert_allclose(laplacian(grid1, f), -k * k * f, atol=1e-12)

    def test_2d_div_grad_is_laplacian(self, grid2):
        rng = np.random.default_rng(1)
        f = band_limited_random(grid2, 5, 1.0, 2, 4).values
        np.testing.assert_allclose(divergence(grid2, gradient(grid2, f)), laplacian(grid2, f), atol=1e-12)
        assert rng is not None

    def test_derivative_keeps_representation(self, grid1):
        (x,) = grid1.coordinates()
        f = Field(grid1, np.cos(2 * np.pi * x / grid1.period), PHYSICAL, True)
        d = derivative(f, 0, 2)
        assert d.representation == PHYSICAL
        s = derivative(transform(f), 0, 1)
        assert s.representation == SPECTRAL

    def test_transform_round_trip(self, grid1):
        f = Field(grid1, np.random.default_rng(0).standard_normal(grid1.shape), PHYSICAL, True)
        back = transform(transform(f, "forward"), "inverse")
        np.testing.assert_allclose(back.values, f.values, atol=1e-14)
        with pytest.raises(ConfigurationError):
            transform(f, "inverse")


class TestNorms:
    def test_sobolev_norm_of_cosine(self):
        g = GridSpec(1, 64, 2 * np.pi)
        (x,) = g.coordinates()
        f = np.cos(3 * x)
        # ||cos 3x||_{L^2(0,2pi)}^2 = pi, multiplier (1 + 9)^s
        for s in (0, 1, 2):
            assert sobolev_norm_array(g, f, s) == pytest.approx(math.sqrt(math.pi * 10 ** s), rel=1e-13)

    def test_vector_norm_sums_components(self, grid2):
        a = band_limited_random(grid2, 4, 1.0, 1, 1).values
        b = band_limited_random(grid2, 4, 2.0, 1, 2).values
        v = np.stack([a, b])
        assert sobolev_norm_array(grid2, v, 1) == pytest.approx(math.sqrt(5.0), rel=1e-12)

    def test_linf(self, grid1):
        f = Field(grid1, np.full(grid1.shape, -2.5), PHYSICAL, True)
        assert linf_norm(f) == 2.5

    def test_sobolev_field_api(self, grid1):
        f = band_limited_random(grid1, 6, 0.7, 2, 9)
        assert sobolev_norm(f, 2) == pytest.approx(0.7, rel=1e-12)

    @given(s=st.integers(0, 3), seed=st.integers(0, 10_000))
    @settings(max_examples=25, deadline=None)
    def test_norm_monotone_in_s(self, s, seed):
        g = GridSpec(1, 64)
        f = band_limited_random(g, 10, 1.0, 0, seed).values
        assert sobolev_norm_array(g, f, s) <= sobolev_norm_array(g, f, s + 1) * (1 + 1e-14)

    def test_dk_square_k1_is_grad_square(self, grid2):
        f = band_limited_random(grid2, 4, 1.0, 1, 5).values
        np.testing.assert_allclose(dk_square_array(grid2, f, 1), np.sum(gradient(grid2, f) ** 2, axis=0), atol=1e-13)

    def test_dk_square_integral_matches_multiplier(self, grid2):
        # int |D^k f|^2 = sum |xi|^{2k} |f_hat|^2
        f = band_limited_random(grid2, 4, 1.0, 1, 6).values
        hat = grid2.fft(f)
        for k in (1, 2, 3):
            lhs = grid2.integrate(dk_square_array(grid2, f, k))
            rhs = np.sum(grid2.xi_sq ** k * np.abs(hat) ** 2) * grid2.cell_volume
            assert lhs == pytest.approx(rhs, rel=1e-11)

    def test_gamma_weight_must_be_positive(self, grid1):
        b = np.full(grid1.shape, -20.0)
        with pytest.raises(RegimeViolation):
            gamma_seminorm_array(grid1, b, np.zeros((1,) + grid1.shape, complex), 0, 0.1)

    def test_energy_of_constant_state_is_zero(self, grid1):
        psi = np.exp(0.4j) * np.ones(grid1.shape)
        assert gl_energy_array(grid1, psi, 0.1) == 0.0

    def test_energy_of_plane_wave(self):
        g = GridSpec(1, 64, 2 * np.pi)
        (x,) = g.coordinates()
        psi = np.exp(2j * x)
        # |grad psi|^2 / 2 = 2 on a period of length 2 pi
        assert gl_energy_array(g, psi, 0.3) == pytest.approx(4 * np.pi, rel=1e-13)


class TestBandLimitedRandom:
    def test_deterministic_and_normalized(self, grid1):
        a = band_limited_random(grid1, 8, 0.5, 2, 42)
        b = band_limited_random(grid1, 8, 0.5, 2, 42)
        np.testing.assert_array_equal(a.values, b.values)
        assert sobolev_norm(a, 2) == pytest.approx(0.5, rel=1e-13)
        assert abs(np.mean(a.values)) < 1e-15

    def test_band_limit(self, grid1):
        a = band_limited_random(grid1, 8, 1.0, 2, 1)
        hat = grid1.fft(a.values)
        assert np.abs(hat[np.abs(grid1.mode_indices[0]) > 8]).max() < 1e-13

    def test_zero_target(self, grid1):
        assert not band_limited_random(grid1, 8, 0.0, 2, 1).values.any()

    def test_bad_max_mode(self, grid1):
        with pytest.raises(ConfigurationError):
            band_limited_random(grid1, 200, 1.0, 2, 1)


def test_field_shape_checked(grid1):
    with pytest.raises(ConfigurationError):
        Field(grid1, np.zeros(10))
    with pytest.raises(ConfigurationError):
        VectorField(grid1, np.zeros(grid1.shape))
