import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cglwave.errors import RegimeViolation, VanishingRisk
from cglwave.hydro import (
    SQRT2,
    band_split,
    build_psi,
    bz_norm,
    check_modulus,
    compute_M0,
    extract_hydro,
    hydro_arrays,
    hydro_from_bv,
    psi_from_bv,
    symmetrize,
    desymmetrize,
    z_from_bv,
)
from cglwave.spectral import PHYSICAL, Field, GridSpec, PerturbationParams, gradient, sobolev_norm_array

from helpers import random_state


class TestLifting:
    def test_b_and_v_recover_initial_data(self, grid1, params):
        a0, phi0, psi0 = random_state(grid1, params)
        h = extract_hydro(psi0, params)
        np.testing.assert_allclose(h.b.values, a0.values, atol=1e-12)
        np.testing.assert_allclose(h.v.values, 2 * gradient(grid1, phi0.values), atol=1e-12)

    def test_round_trip_through_bv(self, grid2):
        p = PerturbationParams(0.2, 0.1, 3)
        a0, phi0, psi0 = random_state(grid2, p, amp=0.5, seed=3, max_mode=4)
        b, v, _ = hydro_arrays(grid2, psi0.values, p.eps)
        psi = psi_from_bv(grid2, b, v, p.eps)
        # equal up to a global phase
        ratio = psi0.values / psi
        np.testing.assert_allclose(ratio / ratio.flat[0], 1.0, atol=1e-11)

    def test_z_definitions_agree(self, grid1, params):
        _, _, psi0 = random_state(grid1, params, seed=4)
        b, v, z = hydro_arrays(grid1, psi0.values, params.eps)
        np.testing.assert_allclose(z, z_from_bv(grid1, b, v, params.eps), atol=1e-12)
        assert hydro_from_bv(grid1, b, v, params.eps).z.values.shape == (1, 256)

    def test_gain_identity(self, grid2):
        p = PerturbationParams(0.1, 0.1, 3)
        _, _, psi0 = random_state(grid2, p, amp=0.4, seed=5, max_mode=4)
        b, _, z = hydro_arrays(grid2, psi0.values, p.eps)
        lhs = p.eps / SQRT2 * gradient(grid2, b)
        rhs = -(1 + p.eps / SQRT2 * b) * np.imag(z)
        assert np.abs(lhs - rhs).max() < 1e-10

    def test_amplitude_bound(self, grid1, params):
        a0 = Field(grid1, np.full(grid1.shape, 20.0), PHYSICAL, True)
        with pytest.raises(RegimeViolation):
            build_psi(a0, Field(grid1, np.zeros(grid1.shape), PHYSICAL, True), params)

    def test_vanishing_risk_reports_location(self, grid1):
        psi = np.ones(grid1.shape, complex)
        psi[17] = 0.1
        with pytest.raises(VanishingRisk) as info:
            check_modulus(grid1, psi)
        assert info.value.min_modulus == pytest.approx(0.1)
        assert info.value.location[0] == pytest.approx(17 * grid1.spacing)


class TestSymmetrization:
    @given(seed=st.integers(0, 10_000), eps=st.sampled_from([0.05, 0.1, 0.5, 1.0]))
    @settings(max_examples=20, deadline=None)
    def test_inverse(self, seed, eps):
        g = GridSpec(1, 64)
        p = PerturbationParams(eps, 0.1 * eps if eps < 1 else 0.5, 2)
        _, _, psi0 = random_state(g, p, amp=0.3, seed=seed, max_mode=6)
        h = extract_hydro(psi0, p)
        b, v = desymmetrize(symmetrize(h, p), p)
        np.testing.assert_allclose(b.values, h.b.values, atol=1e-12)
        np.testing.assert_allclose(v.values, h.v.values, atol=1e-12)

    def test_eps_zero_gives_plain_b(self, grid1, params):
        _, _, psi0 = random_state(grid1, params)
        h = extract_hydro(psi0, params)
        s = symmetrize(h, params, eps=0.0)
        np.testing.assert_allclose(s.c.values, h.b.values, atol=1e-13)

    def test_c_norm_dominates_b_norm(self, grid1, params):
        _, _, psi0 = random_state(grid1, params)
        h = extract_hydro(psi0, params)
        s = symmetrize(h, params)
        assert sobolev_norm_array(grid1, s.c.values, 0) >= sobolev_norm_array(grid1, h.b.values, 0)


class TestBands:
    @pytest.mark.parametrize("scheme", ["low_high", "small_mid_high"])
    def test_split_sums_to_field(self, grid1, scheme):
        p = PerturbationParams(0.3, 0.1)
        f = Field(grid1, np.random.default_rng(0).standard_normal(grid1.shape), PHYSICAL, True)
        parts = band_split(f, p, scheme)
        np.testing.assert_allclose(sum(x.values for x in parts.values()), f.values, atol=1e-13)

    def test_unknown_scheme(self, grid1, params):
        with pytest.raises(ValueError):
            band_split(Field(grid1, np.zeros(grid1.shape), PHYSICAL, True), params, "octaves")


class TestM0:
    def test_zero_data(self, grid1, params):
        z = Field(grid1, np.zeros(grid1.shape), PHYSICAL, True)
        assert compute_M0(z, z, params) == 0.0

    def test_linear_in_amplitude(self, grid1, params):
        a0, phi0, _ = random_state(grid1, params)
        m1 = compute_M0(a0, phi0, params)
        a2 = Field(grid1, 2 * a0.values, PHYSICAL, True)
        p2 = Field(grid1, 2 * phi0.values, PHYSICAL, True)
        assert compute_M0(a2, p2, params) == pytest.approx(2 * m1, rel=1e-13)

    def test_bz_norm(self, grid1):
        b = np.zeros(grid1.shape)
        z = np.zeros((1,) + grid1.shape, complex)
        assert bz_norm(grid1, b, z, 2) == 0.0
