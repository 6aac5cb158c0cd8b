"""Linear solve, nonlinear terms, off-line product and energy diagnostics."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DomainError
from .grid import TWO_PI, SpectralField, ensure_same_grid
from .noise import NoiseSample, mode_values
from .symbols import (
    D1,
    D1R,
    D2,
    D2R,
    ELL,
    GAUSSIAN_MASK,
    GREEN,
    PROJECTION,
    Mask,
    abs_partial1,
    apply_multiplier,
    dealiased_product,
    mollify,
)


def _field(x) -> SpectralField:
    return x.field if isinstance(x, NoiseSample) else x


def solve_linear(xi) -> SpectralField:
    """Solution ``v = G xi`` of ``L v = P xi``."""
    return apply_multiplier(_field(xi), GREEN)


def offline_product(v_ell: SpectralField) -> SpectralField:
    """``F^ell = P(v_ell d2R v_ell)``."""
    return apply_multiplier(dealiased_product(v_ell, apply_multiplier(v_ell, D2R)), PROJECTION)


@dataclass(frozen=True, eq=False)
class RippleState:
    """Noise together with the derived linear solution and off-line product."""

    xi: NoiseSample
    v: SpectralField
    v_ell: SpectralField
    F_ell: SpectralField
    sigma: float
    ell: float
    mask: Mask = GAUSSIAN_MASK

    @classmethod
    def build(cls, xi: NoiseSample, sigma: float, ell: float, mask: Mask = GAUSSIAN_MASK) -> "RippleState":
        if sigma < 0:
            raise DomainError("sigma must be nonnegative")
        v = solve_linear(xi)
        v_ell = mollify(v, ell, mask)
        return cls(xi, v, v_ell, offline_product(v_ell), float(sigma), float(ell), mask)


def nonlinear_rhs_psi(v: SpectralField, w: SpectralField, sigma: float) -> SpectralField:
    """Nonlinearity collecting every term of the equation for ``w`` except ``sigma^2 F``.

    ``sigma v d2R w + w d2R(sigma v) + w d2R w + 1/2 d2R (w + sigma v)^2
    - 1/2 (w + sigma v) d1R (w + sigma v)^2``
    """
    ensure_same_grid(v, w)
    sv = sigma * v
    u = w + sv
    d2rw = apply_multiplier(w, D2R)
    u2 = dealiased_product(u, u)
    out = (
        dealiased_product(sv, d2rw)
        + dealiased_product(w, apply_multiplier(sv, D2R))
        + dealiased_product(w, d2rw)
        + 0.5 * apply_multiplier(u2, D2R)
        - 0.5 * dealiased_product(u, apply_multiplier(u2, D1R))
    )
    return out


def euler_lagrange_field(u: SpectralField, xi, sigma: float, ell: float, mask: Mask = GAUSSIAN_MASK) -> SpectralField:
    """``L u + P(u d2R u) + 1/2 d2R u^2 - 1/2 P(u d1R u^2) - sigma P xi_ell``."""
    xi_ell = mollify(_field(xi), ell, mask)
    u2 = dealiased_product(u, u)
    nonlinear = (
        dealiased_product(u, apply_multiplier(u, D2R))
        + 0.5 * apply_multiplier(u2, D2R)
        - 0.5 * dealiased_product(u, apply_multiplier(u2, D1R))
    )
    return apply_multiplier(u, ELL) + apply_multiplier(nonlinear - sigma * xi_ell, PROJECTION)


def euler_lagrange_residual(u: SpectralField, xi, sigma: float, ell: float, mask: Mask = GAUSSIAN_MASK) -> float:
    """Spectral infinity norm of :func:`euler_lagrange_field`."""
    return euler_lagrange_field(u, xi, sigma, ell, mask).spectral_sup()


# -- energy -------------------------------------------------------------------

def _require_mean_free(m: SpectralField) -> None:
    if not m.x1_mean_free(1e-10):
        raise DomainError("energy needs a magnetization with vanishing x1-average")


def _inner(a: SpectralField, b: SpectralField) -> float:
    """``int a b dx`` by Parseval."""
    return float(np.sum((a.coeffs * np.conj(b.coeffs)).real))


def energy(m: SpectralField, xi, sigma: float) -> float:
    """``int (d1 m)^2 + int (|d1|^(-1/2)(d2 m - d1(m^2/2)))^2 - 2 sigma int xi m``."""
    _require_mean_free(m)
    xi = _field(xi)
    ensure_same_grid(m, xi)
    d1m = apply_multiplier(m, D1)
    q = apply_multiplier(m, D2) - 0.5 * apply_multiplier(dealiased_product(m, m), D1)
    stray = apply_multiplier(q, abs_partial1(-0.5))
    return _inner(d1m, d1m) + _inner(stray, stray) - 2.0 * sigma * _inner(xi, m)


def energy_gradient(m: SpectralField, xi, sigma: float) -> SpectralField:
    """``L^2`` gradient of :func:`energy` restricted to fields with ``P m = m``.

    Equals ``2 (L m + P(m d2R m) + 1/2 d2R m^2 - 1/2 P(m d1R m^2) - sigma P xi)``.
    """
    _require_mean_free(m)
    xi = _field(xi)
    m2 = dealiased_product(m, m)
    g = (
        apply_multiplier(m, ELL)
        + apply_multiplier(
            dealiased_product(m, apply_multiplier(m, D2R))
            + 0.5 * apply_multiplier(m2, D2R)
            - 0.5 * dealiased_product(m, apply_multiplier(m2, D1R))
            - sigma * xi,
            PROJECTION,
        )
    )
    return 2.0 * g


def linearized_energy(u: SpectralField, xi, sigma: float) -> float:
    """Quadratic energy ``int (d1 u)^2 + int (|d1|^(-1/2) d2 u)^2 - 2 sigma int xi u``."""
    _require_mean_free(u)
    return _inner(apply_multiplier(u, ELL), u) - 2.0 * sigma * _inner(_field(xi), u)


def ball_modes(K: float) -> tuple[np.ndarray, np.ndarray]:
    """Integer modes with ``j1 != 0`` and ``d(k, 0) <= K`` on the infinite lattice."""
    J1 = int(math.floor(K / TWO_PI))
    out1, out2 = [], []
    for j in range(-J1, J1 + 1):
        if j == 0:
            continue
        rest = K - TWO_PI * abs(j)
        if rest < 0:
            continue
        J2 = int(math.floor(rest**1.5 / TWO_PI + 1e-12))
        b = np.arange(-J2, J2 + 1)
        out1.append(np.full(b.size, j))
        out2.append(b)
    if not out1:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    return np.concatenate(out1), np.concatenate(out2)


def green_at(j1, j2) -> np.ndarray:
    k1 = TWO_PI * np.asarray(j1, dtype=float)
    k2 = TWO_PI * np.asarray(j2, dtype=float)
    a = np.abs(k1)
    return np.where(a > 0, a / np.where(a > 0, a**3 + k2**2, 1.0), 0.0)


def analytic_partial_sum(K: float, sigma: float = 1.0) -> float:
    """``-sigma^2 sum G(k)`` over the ``d``-ball of radius ``K`` (``k1 != 0``)."""
    j1, j2 = ball_modes(K)
    return -sigma**2 * math.fsum(green_at(j1, j2))


@dataclass
class EnergyDivergenceReport:
    cutoffs: list[float]
    analytic: list[float]
    mc_mean: list[float]
    mc_stderr: list[float]
    n_modes: list[int]
    n_samples: int
    log_slope: float
    log_intercept: float
    log_r2: float
    power_exponent: float
    power_r2: float

    @property
    def mc_z(self) -> list[float]:
        return [abs(m - a) / s if s > 0 else (0.0 if m == a else math.inf)
                for m, a, s in zip(self.mc_mean, self.analytic, self.mc_stderr)]


def _linear_fit(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    A = np.vstack([x, np.ones_like(x)]).T
    (c, b), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - (c * x + b)
    ss = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss if ss > 0 else 1.0
    return float(c), float(b), r2


def linearized_energy_divergence(cutoffs, seeds, sigma: float = 1.0) -> EnergyDivergenceReport:
    """Partial sums of the linearized energy at the critical point versus cutoff.

    For each ``K`` the closed form ``-sigma^2 sum G`` is compared with a Monte
    Carlo mean of ``E_lin(sigma G xi)`` evaluated as a quadratic form, and
    ``c log K + b`` is fitted to the closed-form sums.
    """
    cutoffs = [float(K) for K in cutoffs]
    if len(cutoffs) < 4:
        raise ConfigurationError("need at least 4 cutoffs")
    if any(b <= a for a, b in zip(cutoffs, cutoffs[1:])):
        raise ConfigurationError("cutoffs must be increasing")
    seeds = np.asarray(list(seeds), dtype=np.int64)
    if seeds.size < 2:
        raise ConfigurationError("need at least 2 seeds")
    analytic, means, ses, counts = [], [], [], []
    for K in cutoffs:
        j1, j2 = ball_modes(K)
        counts.append(int(j1.size))
        analytic.append(analytic_partial_sum(K, sigma))
        k1 = TWO_PI * j1.astype(float)
        k2 = TWO_PI * j2.astype(float)
        G = green_at(j1, j2)
        samples = []
        for s in seeds:
            xi = mode_values(None, s, j1, j2)
            u = sigma * G * xi
            quad = (k1**2 + k2**2 / np.abs(k1)) * np.abs(u) ** 2
            samples.append(math.fsum(quad) - 2.0 * sigma * math.fsum((u * np.conj(xi)).real))
        samples = np.asarray(samples)
        means.append(math.fsum(samples) / samples.size)
        ses.append(float(samples.std(ddof=1) / math.sqrt(samples.size)))
    c, b, r2 = _linear_fit(np.log(cutoffs), analytic)
    p, _, pr2 = _linear_fit(np.log(cutoffs), np.log(np.abs(analytic)))
    return EnergyDivergenceReport(cutoffs, analytic, means, ses, counts, int(seeds.size), c, b, r2, p, pr2)


# -- spectra ------------------------------------------------------------------

def inscribed_radius(grid) -> float:
    """Largest ``r`` such that the ``d``-ball of radius ``r`` fits in the frequency box."""
    return min(np.pi * grid.n1, (np.pi * grid.n2) ** (2.0 / 3.0))


def dyadic_annulus_means(grid, values: np.ndarray, r_max: float | None = None) -> list[tuple[float, float, int]]:
    """Means of ``values`` over annuli ``2^m < d(k,0) <= 2^(m+1)`` inside radius ``r_max``.

    Returns ``(lower radius, mean, count)`` for every annulus lying fully inside.
    """
    r_max = inscribed_radius(grid) if r_max is None else r_max
    d = grid.d0
    out = []
    m = int(math.floor(math.log2(TWO_PI)))
    while 2.0 ** (m + 1) <= r_max:
        sel = (d > 2.0**m) & (d <= 2.0 ** (m + 1)) & (grid.j1 != 0)
        if np.any(sel):
            out.append((2.0**m, float(np.mean(values[sel])), int(np.count_nonzero(sel))))
        m += 1
    return out
