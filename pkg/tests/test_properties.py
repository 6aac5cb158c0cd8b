import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from ripple.experiments import fit_slope
from ripple.grid import SpectralField, forward, hermitian_defect, inverse, make_grid
from ripple.noise import mode_values
from ripple.norms import PairPlan, cc_distance, holder_neg_semigroup, holder_pos
from ripple.snapshot import decode, encode
from ripple.symbols import HILBERT, PROJECTION, apply_multiplier, dealiased_product, heat_convolve

dims = st.sampled_from([4, 6, 8, 12, 16])
seeds = st.integers(0, 2**63 - 1)
SETTINGS = settings(max_examples=40, deadline=None)


def field(n1, n2, seed):
    g = make_grid(n1, n2)
    return SpectralField.from_physical(g, np.random.default_rng(seed).standard_normal(g.shape))


class TestTransformProperties:
    @SETTINGS
    @given(dims, dims, st.integers(0, 10_000))
    def test_round_trip_and_hermitian(self, n1, n2, seed):
        g = make_grid(n1, n2)
        v = np.random.default_rng(seed).standard_normal(g.shape)
        c = forward(g, v)
        assert hermitian_defect(g, c) == 0.0
        assert np.max(np.abs(inverse(g, c) - v)) <= 1e-12 * max(1.0, np.max(np.abs(v)))

    @SETTINGS
    @given(dims, dims, st.integers(0, 10_000))
    def test_hilbert_squared(self, n1, n2, seed):
        f = field(n1, n2, seed)
        rr = apply_multiplier(apply_multiplier(f, HILBERT), HILBERT)
        assert np.array_equal(rr.coeffs, -apply_multiplier(f, PROJECTION).coeffs)

    @SETTINGS
    @given(st.floats(1e-6, 1e-2), st.floats(1e-6, 1e-2), st.integers(0, 1000))
    def test_semigroup(self, t, s, seed):
        f = field(16, 16, seed)
        a = heat_convolve(heat_convolve(f, t), s)
        b = heat_convolve(f, t + s)
        assert np.max(np.abs(a.coeffs - b.coeffs)) <= 1e-12 * f.spectral_sup()

    @SETTINGS
    @given(st.integers(0, 1000), st.integers(0, 1000))
    def test_product_commutative_and_bilinear(self, a, b):
        f, g = field(8, 8, a), field(8, 8, b)
        fg = dealiased_product(f, g)
        assert np.allclose(fg.coeffs, dealiased_product(g, f).coeffs, atol=1e-14)
        assert np.allclose(dealiased_product(2.0 * f, g).coeffs, 2.0 * fg.coeffs, atol=1e-14)


class TestNoiseProperties:
    @SETTINGS
    @given(seeds, st.integers(-8, 7), st.integers(-8, 7))
    def test_conjugate_partner(self, seed, j1, j2):
        g = make_grid(16, 16)
        assert mode_values(g, seed, -j1, -j2) == np.conj(mode_values(g, seed, j1, j2))

    @SETTINGS
    @given(seeds, st.integers(-7, 7), st.integers(-7, 7))
    def test_lattice_and_grid_agree_inside_band(self, seed, j1, j2):
        assert mode_values(make_grid(16, 16), seed, j1, j2) == mode_values(None, seed, j1, j2)


points = st.tuples(st.floats(0, 1, exclude_max=True), st.floats(0, 1, exclude_max=True))


class TestNormProperties:
    @SETTINGS
    @given(points, points, points)
    def test_distance_is_a_metric(self, x, y, z):
        assert cc_distance(x, y) == cc_distance(y, x)
        assert cc_distance(x, z) <= cc_distance(x, y) + cc_distance(y, z) + 1e-12

    @SETTINGS
    @given(st.integers(0, 1000), st.floats(0.1, 1.4), st.floats(-3, 3).filter(lambda c: abs(c) > 1e-3))
    def test_holder_homogeneous(self, seed, alpha, c):
        f = field(8, 8, seed)
        a = holder_pos(f, alpha, PairPlan("exhaustive")).value
        b = holder_pos(c * f, alpha, PairPlan("exhaustive")).value
        assert np.isclose(b, abs(c) * a, rtol=1e-12)

    @SETTINGS
    @given(st.integers(0, 1000), st.floats(0.1, 0.99), st.integers(0, 7), st.integers(0, 7))
    def test_holder_translation_invariant(self, seed, alpha, s1, s2):
        f = field(8, 8, seed)
        g = SpectralField.from_physical(f.grid, np.roll(f.physical(), (s1, s2), axis=(0, 1)))
        a = holder_pos(f, alpha, PairPlan("exhaustive")).value
        assert np.isclose(holder_pos(g, alpha, PairPlan("exhaustive")).value, a, rtol=1e-12)

    @SETTINGS
    @given(st.integers(0, 1000), st.floats(-1.4, -0.05).filter(lambda b: min(abs(b + 1), abs(b + 0.5)) > 1e-3))
    def test_semigroup_norm_nonnegative_and_linear(self, seed, beta):
        f = field(16, 16, seed)
        a = holder_neg_semigroup(f, beta).value
        assert a >= 0
        assert np.isclose(holder_neg_semigroup(-2.0 * f, beta).value, 2.0 * a, rtol=1e-12)


class TestHarnessProperties:
    @SETTINGS
    @given(st.floats(-3, 3), st.floats(0.1, 10))
    def test_fit_recovers_exponent(self, p, c):
        fit = fit_slope([(2.0**-n, c * 2.0 ** (-n * p)) for n in range(2, 10)])
        assert abs(fit.slope - p) < 1e-9

    @SETTINGS
    @given(dims, dims, st.integers(0, 1000))
    def test_snapshot_round_trip(self, n1, n2, seed):
        v = np.random.default_rng(seed).standard_normal((n1, n2))
        assert np.array_equal(decode(encode(v)), v)
