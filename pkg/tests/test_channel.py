import numpy as np
import pytest

from blockspread import ChannelSpec, apply, draw_offsets, superpose_async
from blockspread.channel import add_noise, noise_variance, two_tap_taps


def unit_block(n=64, seed=0):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return x / np.linalg.norm(x)


class TestApply:
    def test_noise_disabled_awgn_exact(self):
        x = unit_block()
        y, real = apply(ChannelSpec("awgn", float("inf")), x)
        assert np.array_equal(y, x)
        assert real.noise_variance == 0.0

    def test_two_tap_first_tap_only(self):
        x = unit_block()
        y, real = apply(ChannelSpec("two-tap", float("inf"), rho=0.0), x)
        assert np.allclose(y[:-1], x, atol=1e-15)
        assert y[-1] == 0.0
        assert y.size == x.size + 1

    def test_awgn_noise_variance(self):
        x = unit_block(n=10**6, seed=1)
        gamma_db = 3.0
        y, real = apply(ChannelSpec("awgn", gamma_db), x, np.random.default_rng(7))
        noise = y - x
        measured = np.mean(np.abs(noise) ** 2)
        expected = 1.0 / 10 ** (gamma_db / 10)
        assert abs(measured / expected - 1.0) < 0.01
        assert real.noise_variance == pytest.approx(expected, rel=1e-12)

    def test_noise_whiteness(self):
        x = np.zeros(10**6, dtype=complex) + 1.0
        y, _ = apply(ChannelSpec("awgn", 0.0), x, np.random.default_rng(3))
        n = y - x
        lag1 = np.vdot(n[:-1], n[1:]) / np.vdot(n, n)
        assert abs(lag1) < 0.01

    def test_rayleigh_tap_statistics(self):
        x = unit_block(n=4)
        rng = np.random.default_rng(11)
        spec = ChannelSpec("rayleigh", float("inf"))
        taps = [apply(spec, x, rng)[1].taps[0] for _ in range(10**5)]
        power = np.mean(np.abs(taps) ** 2)
        assert abs(power - 1.0) < 0.02

    def test_two_tap_unit_energy(self):
        for rho in (0.0, 0.2, 0.5, 0.9):
            taps = two_tap_taps(rho, fading=False)
            assert abs(np.sum(np.abs(taps) ** 2) - 1.0) < 1e-12

    def test_two_tap_fading_draws_per_tap(self):
        rng = np.random.default_rng(5)
        spec = ChannelSpec("two-tap", float("inf"), rho=0.2, fading=True)
        x = unit_block()
        _, r1 = apply(spec, x, rng)
        _, r2 = apply(spec, x, rng)
        assert not np.allclose(r1.taps, r2.taps)

    def test_determinism(self):
        x = unit_block()
        spec = ChannelSpec("two-tap", 5.0, rho=0.3, fading=True, seed=99)
        y1, _ = apply(spec, x)
        y2, _ = apply(spec, x)
        assert np.array_equal(y1, y2)

    def test_empty_input(self):
        with pytest.raises(ValueError, match="empty"):
            apply(ChannelSpec("awgn", 0.0), np.array([]))

    def test_rho_validation(self):
        with pytest.raises(ValueError, match="rho"):
            ChannelSpec("two-tap", 0.0, rho=1.0)

    def test_model_validation(self):
        with pytest.raises(ValueError, match="model"):
            ChannelSpec("rician", 0.0)

    def test_noise_variance_helper(self):
        assert noise_variance(1.0, float("inf")) == 0.0
        assert noise_variance(2.0, 0.0) == pytest.approx(2.0)
        assert noise_variance(1.0, 10.0) == pytest.approx(0.1)


class TestSuperpose:
    def test_single_identity(self):
        x = unit_block()
        assert np.array_equal(superpose_async([x], [0]), x)

    def test_disjoint_energy(self):
        a, b = unit_block(seed=1), unit_block(seed=2)
        y = superpose_async([a, b], [0, a.size])
        assert abs(np.vdot(y, y).real - 2.0) < 1e-10

    def test_shift_and_add_oracle(self):
        a, b = unit_block(n=6, seed=1), unit_block(n=6, seed=2)
        y = superpose_async([a, b], [0, 3])
        expected = np.zeros(9, dtype=complex)
        for i in range(6):
            expected[i] += a[i]
            expected[i + 3] += b[i]
        assert np.allclose(y, expected, atol=1e-15)

    def test_list_length_mismatch(self):
        with pytest.raises(ValueError, match="pair up"):
            superpose_async([unit_block()], [0, 1])

    def test_negative_offset(self):
        with pytest.raises(ValueError, match=">= 0"):
            superpose_async([unit_block()], [-1])


class TestDrawOffsets:
    def test_synchronous(self):
        assert draw_offsets(5, "sync", 100, 0).tolist() == [0] * 5

    def test_uniform_max_zero(self):
        assert draw_offsets(5, "uniform", 0, 0).tolist() == [0] * 5

    def test_uniform_histogram(self):
        # chi-square style check: each bin within 3 sigma of the multinomial
        # expectation over 1e5 draws
        max_offset = 9
        draws = draw_offsets(10**5, "uniform", max_offset, 123)
        counts = np.bincount(draws, minlength=max_offset + 1)
        n, p = draws.size, 1.0 / (max_offset + 1)
        sigma = np.sqrt(n * p * (1 - p))
        assert np.all(np.abs(counts - n * p) < 3 * sigma)
        assert draws.min() >= 0 and draws.max() <= max_offset

    def test_mode_validation(self):
        with pytest.raises(ValueError, match="mode"):
            draw_offsets(2, "poisson", 5, 0)


class TestAddNoise:
    def test_zero_variance_copy(self):
        x = unit_block()
        y = add_noise(x, 0.0, np.random.default_rng(0))
        assert np.array_equal(y, x)
        assert y is not x

    def test_variance(self):
        x = np.zeros(10**5, dtype=complex)
        y = add_noise(x, 0.25, np.random.default_rng(1))
        assert abs(np.mean(np.abs(y) ** 2) / 0.25 - 1.0) < 0.02
