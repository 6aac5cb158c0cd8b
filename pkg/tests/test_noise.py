import numpy as np
import pytest

from ripple.errors import ConfigurationError
from ripple.grid import make_grid
from ripple.noise import (
    mode_values,
    noise_coeffs,
    noise_moment_suite,
    pair_covariance,
    power_law_field,
    sample_white_noise,
    wick_expectation,
)
from ripple.rng import normal_pair, philox4x32

import oracles

# Random123 known-answer vectors for Philox4x32-10
KAT = [
    ((0, 0, 0, 0), (0, 0), (0x6627E8D5, 0xE169C58D, 0xBC57AC4C, 0x9B00DBD8)),
    ((0xFFFFFFFF,) * 4, (0xFFFFFFFF,) * 2, (0x408F276D, 0x41C83B0E, 0xA20BC7C6, 0x6D5451FD)),
    ((0x243F6A88, 0x85A308D3, 0x13198A2E, 0x03707344), (0xA4093822, 0x299F31D0),
     (0xD16CFE09, 0x94FDCCEB, 0x5001E420, 0x24126EA1)),
]


class TestPhilox:
    @pytest.mark.parametrize("ctr,key,expected", KAT)
    def test_known_answers(self, ctr, key, expected):
        out = tuple(int(x) for x in philox4x32(ctr, key))
        assert out == expected
        assert oracles.philox_scalar(ctr, key) == expected

    def test_vectorized_matches_scalar(self):
        a = np.arange(-20, 20)
        z1, z2 = normal_pair(99, a, 3 * a)
        for i, j in enumerate(a):
            r1, r2 = oracles.normal_pair_scalar(99, int(j), int(3 * j))
            # vectorized sin/cos may differ from libm in the last ulp
            assert z1[i] == pytest.approx(r1, rel=1e-15, abs=1e-15)
            assert z2[i] == pytest.approx(r2, rel=1e-15, abs=1e-15)

    def test_frozen_normals(self):
        z1, z2 = normal_pair(7, 2, -5)
        assert float(z1) == 0.2309593823243009
        assert float(z2) == -1.1298431822105064


class TestWhiteNoise:
    def test_deterministic(self):
        g = make_grid(16, 16)
        a = sample_white_noise(g, 5).field.coeffs
        b = sample_white_noise(g, 5).field.coeffs
        assert np.array_equal(a, b)
        assert not np.array_equal(a, sample_white_noise(g, 6).field.coeffs)

    def test_frozen_mode(self):
        assert complex(mode_values(None, 0, 1, 2)) == (0.6494451858724444 - 1.026379008502155j)

    def test_hermitian_and_real(self):
        g = make_grid(16, 8)
        xi = sample_white_noise(g, 0).field
        assert np.isrealobj(xi.physical())
        assert xi.mode(-3, 2) == np.conj(xi.mode(3, -2))

    def test_nyquist_and_zero_modes_real(self):
        g = make_grid(8, 8)
        xi = sample_white_noise(g, 11).field
        for m in [(0, 0), (-4, 0), (0, -4), (-4, -4), (-4, 1), (2, -4)]:
            assert xi.mode(*m).imag == 0.0

    def test_modes_independent_of_grid_size(self):
        small = sample_white_noise(make_grid(16, 16), 3).field
        big = sample_white_noise(make_grid(64, 32), 3).field
        for m in [(1, 2), (-7, 3), (5, -7), (0, 1)]:
            assert small.mode(*m) == big.mode(*m)

    def test_subset_draw_matches_full_grid(self):
        g = make_grid(16, 16)
        full = noise_coeffs(g, [4])[0]
        assert mode_values(g, 4, -5, 6) == full[g.slot(-5, 6)]

    def test_projection_removes_k1_zero(self):
        xi = sample_white_noise(make_grid(8, 8), 0)
        assert np.all(xi.projected().coeffs[0, :] == 0)
        assert xi.field.coeffs[0, 0] != 0

    def test_scaled(self):
        xi = sample_white_noise(make_grid(8, 8), 0)
        assert np.array_equal(xi.scaled(2.0).field.coeffs, 2.0 * xi.field.coeffs)

    def test_site_variance_flat_spectrum(self):
        g = make_grid(16, 16)
        vals = np.array([sample_white_noise(g, s).field.physical() for s in range(400)])
        # each site carries one unit of variance per mode
        assert np.mean(vals**2) == pytest.approx(g.size, rel=0.02)


class TestMoments:
    def test_wick_values(self):
        g = make_grid(16, 16)
        k, l = (1, 2), (3, -1)
        assert pair_covariance(g, k, (-1, -2)) == 1.0
        assert pair_covariance(g, k, k) == 0.0
        assert pair_covariance(g, (-8, 0), (-8, 0)) == 1.0
        assert wick_expectation(g, (k, k, (-1, -2), (-1, -2))) == 2.0
        assert wick_expectation(g, (k, (-1, -2), l, (-3, 1))) == 1.0
        assert wick_expectation(g, (k, l, (2, 5), (-6, -6))) == 0.0
        assert wick_expectation(g, ((0, 0),) * 4) == 3.0

    def test_suite_at_ten_thousand_samples(self):
        g = make_grid(16, 16)
        k, l = (1, 2), (3, -1)
        tuples = [(k, (-1, -2)), (k, l), (k, k, (-1, -2), (-1, -2)), (k, (-1, -2), l, (-3, 1)),
                  (k, l, (2, 5), (-6, -6))]
        rep = noise_moment_suite(g, range(10_000), tuples)
        assert rep.n_samples == 10_000 and not rep.flagged
        rows = {r.modes: r for r in rep.rows}
        assert rows[tuples[0]].mean.real == pytest.approx(1.0, rel=0.05)
        assert rows[tuples[2]].mean.real == pytest.approx(2.0, rel=0.10)
        assert rows[tuples[3]].mean.real == pytest.approx(1.0, rel=0.10)
        cross = rows[tuples[1]]
        assert abs(cross.mean.real) <= 3 * cross.stderr[0] and abs(cross.mean.imag) <= 3 * cross.stderr[1]

    def test_suite_preconditions(self):
        g = make_grid(8, 8)
        with pytest.raises(ConfigurationError):
            noise_moment_suite(g, range(50), [((1, 0), (-1, 0))])
        with pytest.raises(ConfigurationError):
            noise_moment_suite(g, range(200), [])


class TestPowerLawField:
    def test_zero_mean_and_cutoff(self):
        g = make_grid(32, 32)
        f = power_law_field(g, 0.5, 0, cutoff=20.0)
        assert f.coeffs[0, 0] == 0
        assert np.all(f.coeffs[g.d0 > 20.0] == 0)

    def test_spectrum_exponent(self):
        g = make_grid(32, 32)
        f = power_law_field(g, 0.3, 1)
        xi = sample_white_noise(g, 1).field
        k = g.slot(2, 3)
        assert abs(f.coeffs[k]) == pytest.approx(abs(xi.coeffs[k]) * g.d0[k] ** -1.55)
