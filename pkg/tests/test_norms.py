import math

import numpy as np
import pytest

from ripple.errors import DomainError
from ripple.grid import SpectralField, make_grid
from ripple.noise import power_law_field
from ripple.norms import (
    PairPlan,
    cc_distance,
    commutator_conv,
    corrected_commutator,
    dyadic_T_grid,
    hilbert_holder_check,
    holder_neg_mollifier,
    holder_neg_semigroup,
    holder_pos,
    holder_pos_pairs,
    holder_pos_reference,
    resolved_T_window,
    x1_commutator,
)
from ripple.symbols import PROJECTION, apply_multiplier, mollifier

import oracles

EXHAUSTIVE = PairPlan("exhaustive")


def sine_field(n=8):
    g = make_grid(n, n)
    x1, x2 = g.coordinates()
    return SpectralField.from_physical(g, np.sin(2 * np.pi * x1) + 0 * x2)


def random_field(n1, n2, seed):
    g = make_grid(n1, n2)
    return SpectralField.from_physical(g, np.random.default_rng(seed).standard_normal(g.shape))


class TestDistance:
    @pytest.mark.parametrize("x,y,d", [((0, 0), (0.5, 0), 0.5), ((0, 0), (0, 0.001), 0.01),
                                       ((0, 0), (0.9, 0), 0.1)])
    def test_examples(self, x, y, d):
        assert cc_distance(x, y) == pytest.approx(d, rel=1e-12)

    def test_vectorized(self):
        d = cc_distance(np.zeros((3, 2)), np.array([[0.25, 0], [0, 0.125], [0.75, 0.875]]))
        assert np.allclose(d, [0.25, 0.25, 0.5])


class TestHolderPositive:
    def test_constant_field_is_zero(self):
        g = make_grid(8, 8)
        f = SpectralField.from_physical(g, np.full(g.shape, 3.0))
        assert holder_pos(f, 0.5).value == 0.0

    def test_sine_closed_form(self):
        # largest quotient is |sin(pi/4) - sin(-pi/4)| over d = 1/4
        assert holder_pos(sine_field(), 1.0, EXHAUSTIVE).value == pytest.approx(4 * math.sqrt(2), rel=1e-15)

    @pytest.mark.parametrize("alpha", [0.3, 1.0, 1.2])
    def test_sine_matches_brute_force(self, alpha):
        f = sine_field()
        expected = oracles.holder_brute(f.physical(), alpha)
        assert holder_pos(f, alpha, EXHAUSTIVE).value == pytest.approx(expected, rel=1e-13)

    @pytest.mark.parametrize("alpha", [0.4, 0.9, 1.3])
    def test_random_field_matches_brute_force(self, alpha):
        f = random_field(8, 8, 1)
        expected = oracles.holder_brute(f.physical(), alpha)
        assert holder_pos(f, alpha, EXHAUSTIVE).value == pytest.approx(expected, rel=1e-13)

    @pytest.mark.parametrize("alpha", [0.6, 1.1])
    def test_exhaustive_equals_reference_loop_exactly(self, alpha):
        f = random_field(16, 16, 2)
        assert holder_pos(f, alpha, EXHAUSTIVE).value == holder_pos_reference(f, alpha)

    def test_exponent_domain(self):
        f = sine_field()
        for a in (0.0, 1.5, -0.2):
            with pytest.raises(DomainError):
                holder_pos(f, a)

    def test_stratified_is_lower_bound_and_reproducible(self):
        f = random_field(64, 64, 3)
        full = holder_pos(f, 0.7, EXHAUSTIVE).value
        a = holder_pos(f, 0.7, PairPlan("stratified", 20_000, 5))
        b = holder_pos(f, 0.7, PairPlan("stratified", 20_000, 5))
        assert a.value == b.value and a.value <= full
        assert a.value > 0.5 * full

    def test_monotone_in_pair_set(self):
        f = random_field(16, 16, 4)
        rng = np.random.default_rng(0)
        idx = [rng.integers(0, 16, 400) for _ in range(4)]
        small = holder_pos_pairs(f, 0.8, *(a[:100] for a in idx))
        big = holder_pos_pairs(f, 0.8, *idx)
        assert small <= big <= holder_pos(f, 0.8, EXHAUSTIVE).value

    def test_default_plan(self):
        assert PairPlan.default_for(make_grid(32, 32)).kind == "exhaustive"
        assert PairPlan.default_for(make_grid(64, 32)).kind == "stratified"


class TestHolderNegative:
    def test_T_grids(self):
        g = make_grid(256, 256)
        Ts = dyadic_T_grid(g)
        assert Ts[0] == 1.0 and Ts[-1] == 2.0**-19 and len(Ts) == 20
        assert resolved_T_window(g) == [2.0**-n for n in range(11, 20)]

    def test_single_mode_closed_form(self):
        g = make_grid(16, 16)
        f = SpectralField.from_modes(g, {(1, 0): 0.5})
        beta = -0.7
        Ts = dyadic_T_grid(g)
        a = (2 * np.pi) ** 3
        expected = max(T ** (-beta / 3) * math.exp(-T * a) for T in Ts)
        est = holder_neg_semigroup(f, beta)
        assert est.value == pytest.approx(expected, rel=1e-12)
        assert est.variant == "semigroup-negative" and est.metadata["T_grid"] == Ts

    @pytest.mark.parametrize("beta", [-1.0, -0.5])
    def test_excluded_exponents(self, beta):
        with pytest.raises(DomainError, match="semigroup"):
            holder_neg_semigroup(sine_field(), beta)

    def test_mollifier_variant(self):
        f = SpectralField.from_modes(make_grid(16, 16), {(1, 0): 0.5})
        est = holder_neg_mollifier(f, -0.75, ells=[1.0, 0.5, 0.25])
        expected = max(l**0.75 * mollifier(l).on(f.grid)[1, 0] for l in (1.0, 0.5, 0.25))
        assert est.value == pytest.approx(expected, rel=1e-12)

    def test_zero_field(self):
        assert holder_neg_semigroup(SpectralField.zeros(make_grid(8, 8)), -0.8).value == 0.0


class TestCommutators:
    def test_constant_multiplier_commutes(self):
        g = make_grid(16, 16)
        u = SpectralField.from_physical(g, np.full(g.shape, 2.0))
        f = random_field(16, 16, 0)
        assert commutator_conv(u, f, 0.25).spectral_sup() < 1e-14

    def test_two_mode_oracle(self):
        g = make_grid(16, 16)
        u = oracles.hermitian({(1, 2): 0.3})
        f = oracles.hermitian({(2, -1): 0.7j})
        phi = mollifier(0.25).on(g)
        out = {}
        for (p, a) in u.items():
            for (q, b) in f.items():
                j = (p[0] + q[0], p[1] + q[1])
                out[j] = out.get(j, 0) + a * b * (phi[g.slot(*q)] - phi[g.slot(*j)])
        fu = SpectralField(g, oracles.to_array(u, 16, 16))
        ff = SpectralField(g, oracles.to_array(f, 16, 16))
        got = commutator_conv(fu, ff, 0.25).coeffs
        assert np.max(np.abs(got - oracles.to_array(out, 16, 16))) < 1e-15

    def test_corrected_commutator_removes_linear_term(self):
        # for u = sin(2 pi x1) the first-order part of the commutator is d1u [x1, phi] f
        g = make_grid(32, 32)
        u = SpectralField.from_modes(g, {(1, 0): -0.5j})
        f = SpectralField.from_modes(g, {(6, 3): 1.0})
        plain = commutator_conv(u, f, 1 / 32).sup_norm()
        corrected = corrected_commutator(u, f, 1 / 32).sup_norm()
        assert corrected < 0.1 * plain

    def test_x1_commutator_symbol(self):
        g = make_grid(16, 16)
        f = SpectralField.from_modes(g, {(2, 1): 1.0})
        T = 1e-3
        k1, k2 = 4 * np.pi, 2 * np.pi
        expected = 1j * (-3 * T * k1 * k1) * math.exp(-T * (k1**3 + k2**2))
        assert x1_commutator(f, T).mode(2, 1) == pytest.approx(expected, rel=1e-12)


class TestHilbertCheck:
    def test_ratio_battery(self):
        g = make_grid(32, 32)
        fields = [apply_multiplier(power_law_field(g, 0.7, s, 12.0), PROJECTION) for s in range(3)]
        rep = hilbert_holder_check(fields, 0.7, 0.05)
        assert len(rep.ratios) == 3 and not rep.flagged
        assert 0 < rep.max_ratio <= 10

    def test_requires_mean_free(self):
        g = make_grid(8, 8)
        with pytest.raises(DomainError):
            hilbert_holder_check(SpectralField.from_modes(g, {(0, 1): 1.0}), 0.7, 0.05)
