import math

import numpy as np
import pytest
from scipy import integrate, special

from blockspread import (
    ber_awgn_approx,
    ber_awgn_exact,
    ber_rayleigh_approx,
    ber_rayleigh_exact,
    bernstein_tail_cross,
    bernstein_tail_single,
    harmonic,
    mui_bound,
    processing_gain_db,
    q_function,
    welch_bound,
)
from blockspread.theory import welch_asymptote


def ber_awgn_quadrature_oracle(sf, gamma):
    """Independent route: correct-detection probability as an integral over
    the matched-filter envelope statistics (noncentral vs. M-1 exponential
    competitors), evaluated by adaptive quadrature."""
    m = 1 << sf

    def integrand(v):
        bessel = special.i0e(2.0 * np.sqrt(v * gamma))
        return bessel * np.exp(-((np.sqrt(v) - np.sqrt(gamma)) ** 2)) * (
            1.0 - np.exp(-v)
        ) ** (m - 1)

    pc, _ = integrate.quad(integrand, 0.0, np.inf, limit=400)
    return (m / 2.0) / (m - 1.0) * (1.0 - pc)


def ber_rayleigh_gamma_oracle(sf, gamma_bar):
    """Independent route: under Rayleigh fading the correct bin is exponential
    with mean 1 + gamma_bar, giving a closed form in gamma functions."""
    m = 1 << sf
    a = 1.0 / (1.0 + gamma_bar)
    ln_pc = special.gammaln(a + 1.0) + special.gammaln(m) - special.gammaln(a + m)
    return (m / 2.0) / (m - 1.0) * float(-np.expm1(ln_pc))


class TestQFunction:
    def test_zero(self):
        assert abs(q_function(0.0) - 0.5) < 1e-15

    def test_minus_infinity(self):
        assert q_function(-np.inf) == 1.0

    def test_unit_argument_vs_quadrature(self):
        val, _ = integrate.quad(
            lambda u: np.exp(-u * u / 2.0) / np.sqrt(2.0 * np.pi), 1.0, np.inf
        )
        assert abs(q_function(1.0) - val) < 1e-9
        assert abs(q_function(1.0) - 0.158655) < 1e-6

    def test_array_input(self):
        out = q_function(np.array([0.0, 1.0]))
        assert out.shape == (2,)


class TestHarmonic:
    def test_first(self):
        assert harmonic(1) == 1.0

    def test_third(self):
        assert abs(harmonic(3) - (1 + 0.5 + 1 / 3)) < 1e-9

    def test_asymptotic_agreement(self):
        exact = sum(1.0 / k for k in range(1, 128))
        asym = math.log(127) + 1 / 254 + 0.57722
        assert abs(harmonic(127) - exact) < 1e-12
        assert abs(exact - asym) / exact < 1e-4

    def test_large_n_uses_asymptote(self):
        n = 10**7
        expected = math.log(n) + 1.0 / (2 * n) + 0.57722
        assert harmonic(n) == pytest.approx(expected, rel=1e-12)

    def test_validation(self):
        with pytest.raises(ValueError):
            harmonic(0)


class TestBerAwgnExact:
    def test_sf1_zero_snr(self):
        assert abs(ber_awgn_exact(1, 0.0) - 0.5) < 1e-12

    def test_sf1_reduces_to_single_term(self):
        assert abs(ber_awgn_exact(1, 2.0) - 0.5 * math.exp(-1.0)) < 1e-9

    @pytest.mark.parametrize("sf", range(1, 10))
    def test_zero_snr_coin_flip(self, sf):
        assert abs(ber_awgn_exact(sf, 0.0) - 0.5) < 1e-9

    @pytest.mark.parametrize(
        "sf,gamma_db", [(5, 8.0), (5, 12.0), (7, 10.0), (7, 13.0), (9, 13.0)]
    )
    def test_against_quadrature_oracle(self, sf, gamma_db):
        gamma = 10 ** (gamma_db / 10)
        mine = ber_awgn_exact(sf, gamma)
        oracle = ber_awgn_quadrature_oracle(sf, gamma)
        assert abs(mine - oracle) / oracle < 1e-6

    def test_monotone_in_gamma(self):
        vals = [ber_awgn_exact(7, g) for g in np.linspace(0, 25, 60)]
        assert all(b <= a + 1e-15 for a, b in zip(vals, vals[1:]))

    def test_bounded(self):
        for sf in (1, 5, 9):
            for g in (0.0, 1.0, 50.0):
                assert 0.0 <= ber_awgn_exact(sf, g) <= 0.5 + 1e-12

    def test_cutoff(self):
        with pytest.raises(ValueError, match="approx"):
            ber_awgn_exact(13, 1.0)


class TestBerAwgnApprox:
    def test_zero_snr_closed_form(self):
        for sf in (1, 5, 7):
            expected = 0.5 * float(q_function(-math.sqrt(1.386 * sf + 1.154)))
            assert abs(ber_awgn_approx(sf, 0.0) - expected) < 1e-12

    def test_tracks_exact_at_sf7(self):
        # computed band: within 2x while exact >= 3e-4, within 4x down to 1e-5
        for gamma_db in np.arange(6.0, 14.6, 0.25):
            gamma = 10 ** (gamma_db / 10)
            exact = ber_awgn_exact(7, gamma)
            approx = ber_awgn_approx(7, gamma)
            if not 1e-5 <= exact <= 1e-1:
                continue
            ratio = max(approx / exact, exact / approx)
            assert ratio < 4.0
            if exact >= 3e-4:
                assert ratio < 2.0

    def test_vanishes_monotonically(self):
        vals = [ber_awgn_approx(7, 10 ** (g / 10)) for g in range(0, 40, 2)]
        assert all(b <= a for a, b in zip(vals, vals[1:]))
        assert vals[-1] < 1e-12


class TestBerRayleighExact:
    def test_sf1_zero_snr(self):
        assert abs(ber_rayleigh_exact(1, 0.0) - 0.5) < 1e-12

    def test_sf1_single_term(self):
        assert abs(ber_rayleigh_exact(1, 2.0) - 0.25) < 1e-12

    def test_sf2_zero_snr(self):
        assert abs(ber_rayleigh_exact(2, 0.0) - 0.5) < 1e-9

    @pytest.mark.parametrize("sf", range(1, 10))
    def test_zero_snr(self, sf):
        assert abs(ber_rayleigh_exact(sf, 0.0) - 0.5) < 1e-9

    @pytest.mark.parametrize(
        "sf,gamma_db", [(5, 20.0), (7, 25.0), (7, 40.0), (9, 30.0)]
    )
    def test_against_gamma_function_oracle(self, sf, gamma_db):
        g = 10 ** (gamma_db / 10)
        mine = ber_rayleigh_exact(sf, g)
        oracle = ber_rayleigh_gamma_oracle(sf, g)
        assert abs(mine - oracle) / oracle < 1e-9

    def test_cutoff(self):
        with pytest.raises(ValueError, match="approx"):
            ber_rayleigh_exact(13, 1.0)


class TestBerRayleighApprox:
    def test_inverse_snr_slope(self):
        v1 = ber_rayleigh_approx(7, 1e2)
        v2 = ber_rayleigh_approx(7, 1e4)
        slope = (math.log(v2) - math.log(v1)) / (math.log(1e4) - math.log(1e2))
        assert abs(slope + 1.0) < 0.1

    def test_zero_snr_bounded(self):
        assert 0.0 < ber_rayleigh_approx(7, 0.0) <= 0.5

    def test_tracks_exact_at_sf7(self):
        for gamma_db in np.arange(14.0, 52.0, 2.0):
            g = 10 ** (gamma_db / 10)
            exact = ber_rayleigh_exact(7, g)
            if not 1e-4 <= exact <= 1e-1:
                continue
            approx = ber_rayleigh_approx(7, g)
            assert max(approx / exact, exact / approx) < 2.0


class TestBernsteinBounds:
    def test_single_printed_value(self):
        # 2 * exp(-10.24 / (2 + 0.2/3)) evaluated directly
        assert bernstein_tail_single(4, 256, 1.0, 0.1) == pytest.approx(
            0.0140984, abs=1e-5
        )

    def test_single_vacuous_at_small_eps(self):
        assert bernstein_tail_single(4, 256, 1.0, 1e-9) == 1.0

    def test_single_log_linear_in_block_length(self):
        # doubling N_SF doubles the exponent magnitude
        b1 = bernstein_tail_single(4, 256, 1.0, 0.1)
        b2 = bernstein_tail_single(4, 512, 1.0, 0.1)
        assert math.log(b2 / 2.0) == pytest.approx(2 * math.log(b1 / 2.0), rel=1e-9)

    def test_single_monotonicity(self):
        assert bernstein_tail_single(4, 256, 1.0, 0.2) <= bernstein_tail_single(
            4, 256, 1.0, 0.1
        )
        assert bernstein_tail_single(8, 256, 1.0, 0.1) <= bernstein_tail_single(
            4, 256, 1.0, 0.1
        )

    def test_single_validation(self):
        with pytest.raises(ValueError):
            bernstein_tail_single(4, 256, 1.0, 0.0)
        with pytest.raises(ValueError):
            bernstein_tail_single(4, 256, 0.0, 0.1)

    def test_cross_printed_value(self):
        assert bernstein_tail_cross(4, 0.125, 0.1) == pytest.approx(0.728, abs=1e-3)

    def test_cross_near_vacuous_at_mu1(self):
        assert bernstein_tail_cross(4, 1.0, 0.01) == 1.0

    def test_cross_decreasing_in_k(self):
        vals = [bernstein_tail_cross(k, 0.125, 0.1) for k in (2, 4, 8, 16)]
        assert all(b < a for a, b in zip(vals, vals[1:]))

    def test_cross_validation(self):
        with pytest.raises(ValueError):
            bernstein_tail_cross(4, 0.0, 0.1)
        with pytest.raises(ValueError):
            bernstein_tail_cross(4, 1.5, 0.1)


class TestMuiBound:
    def test_single_interferer(self):
        amp, power, conf = mui_bound(2, 4, 128, 0.05)
        assert amp == pytest.approx(4 * 128 * 0.05)
        assert power == pytest.approx(amp**2)

    def test_printed_value(self):
        amp, _, _ = mui_bound(4, 4, 128, 0.05)
        assert amp == pytest.approx(76.8)

    def test_confidence_clamped(self):
        _, _, conf = mui_bound(100, 2, 4, 0.01)
        assert 0.0 <= conf <= 1.0

    def test_validation(self):
        with pytest.raises(ValueError):
            mui_bound(1, 4, 128, 0.05)


class TestWelchBound:
    def test_requires_overcomplete(self):
        with pytest.raises(ValueError):
            welch_bound(64, 64)

    def test_printed_value(self):
        assert welch_bound(128, 64) == pytest.approx(0.08874, abs=1e-5)

    def test_large_family_limit(self):
        assert welch_bound(10**9, 64) == pytest.approx(welch_asymptote(64), rel=1e-4)


class TestProcessingGain:
    def test_sf7(self):
        assert processing_gain_db(128) == pytest.approx(21.07, abs=0.01)

    def test_unity(self):
        assert processing_gain_db(1) == 0.0

    def test_doubling_adds_3db(self):
        assert processing_gain_db(256) - processing_gain_db(128) == pytest.approx(
            3.0103, abs=1e-4
        )
