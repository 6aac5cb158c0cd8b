"""Seedable periodic white noise on the torus and its moment diagnostics."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError
from .grid import SpectralField, TorusGrid
from .rng import normal_pair
from .symbols import PROJECTION, apply_multiplier

_INV_SQRT2 = 1.0 / np.sqrt(2.0)


def _wrap(j: np.ndarray, n: int) -> np.ndarray:
    return (j + n // 2) % n - n // 2


def mode_values(grid: TorusGrid | None, seed, j1, j2) -> np.ndarray:
    """Noise coefficients at integer modes ``(j1, j2)`` for one or many seeds.

    All arguments broadcast.  With ``grid=None`` the modes are taken on the
    infinite lattice (no Nyquist identification), which reproduces the grid
    values on every mode strictly inside the Nyquist band.
    """
    j1 = np.asarray(j1, dtype=np.int64)
    j2 = np.asarray(j2, dtype=np.int64)
    if grid is not None:
        j1 = _wrap(j1, grid.n1)
        j2 = _wrap(j2, grid.n2)
        m1 = _wrap(-j1, grid.n1)
        m2 = _wrap(-j2, grid.n2)
        nyq = (j1 == -(grid.n1 // 2)) | (j2 == -(grid.n2 // 2))
    else:
        m1, m2 = -j1, -j2
        nyq = np.zeros(np.broadcast(j1, j2).shape, dtype=bool)
    # representative of {k, -k}: larger of (j2, j1) and (-j2, -j1) lexicographically
    own = (j2 > m2) | ((j2 == m2) & (j1 >= m1))
    r1 = np.where(own, j1, m1)
    r2 = np.where(own, j2, m2)
    selfconj = (j1 == m1) & (j2 == m2)
    z1, z2 = normal_pair(seed, r1, r2)
    real = selfconj | nyq
    sign = np.where(own, 1.0, -1.0)
    return np.where(real, z1 + 0j, _INV_SQRT2 * (z1 + 1j * sign * z2))


def noise_coeffs(grid: TorusGrid, seeds) -> np.ndarray:
    """Coefficient arrays for a batch of seeds, shape ``(len(seeds), n1, n2)``."""
    seeds = np.atleast_1d(np.asarray(seeds, dtype=np.int64))
    out = mode_values(grid, seeds[:, None, None], grid.j1, grid.j2)
    return out.reshape((seeds.size,) + grid.shape)


@dataclass(frozen=True, eq=False)
class NoiseSample:
    """A white-noise realization together with its provenance."""

    field: SpectralField
    seed: int
    grid: TorusGrid

    def projected(self) -> SpectralField:
        """``P xi``: the ``k1 = 0`` column removed."""
        return apply_multiplier(self.field, PROJECTION)

    def scaled(self, c: float) -> "NoiseSample":
        return NoiseSample(c * self.field, self.seed, self.grid)


def sample_white_noise(grid: TorusGrid, seed: int) -> NoiseSample:
    """Draw white noise with ``<xi(k) conj(xi(k'))> = delta(k, k')``.

    Paired modes have independent ``N(0, 1/2)`` real and imaginary parts; the
    zero mode and Nyquist modes are real ``N(0, 1)``.
    """
    c = noise_coeffs(grid, [seed])[0]
    return NoiseSample(SpectralField(grid, c), int(seed), grid)


# -- moment diagnostics -------------------------------------------------------

Mode = tuple[int, int]


def pair_covariance(grid: TorusGrid, a: Mode, b: Mode) -> float:
    """Exact ``E[xi(a) xi(b)]`` (bilinear, no conjugation)."""
    a = (int(_wrap(a[0], grid.n1)), int(_wrap(a[1], grid.n2)))
    b = (int(_wrap(b[0], grid.n1)), int(_wrap(b[1], grid.n2)))
    neg_a = (int(_wrap(-a[0], grid.n1)), int(_wrap(-a[1], grid.n2)))
    if b == neg_a:
        return 1.0
    if b == a:
        nyq = a[0] == -(grid.n1 // 2) or a[1] == -(grid.n2 // 2)
        return 1.0 if nyq else 0.0
    return 0.0


def wick_expectation(grid: TorusGrid, modes: tuple[Mode, ...]) -> float:
    """Gaussian moment ``E[prod xi(k_i)]`` by summing over pairings."""
    modes = tuple(modes)
    if len(modes) % 2:
        return 0.0
    if not modes:
        return 1.0
    first, rest = modes[0], modes[1:]
    total = 0.0
    for i, m in enumerate(rest):
        c = pair_covariance(grid, first, m)
        if c:
            total += c * wick_expectation(grid, rest[:i] + rest[i + 1:])
    return total


@dataclass
class MomentRow:
    modes: tuple[Mode, ...]
    mean: complex
    stderr: tuple[float, float]
    expected: float
    flagged: bool

    @property
    def order(self) -> int:
        return len(self.modes)


@dataclass
class MomentReport:
    rows: list[MomentRow]
    n_samples: int
    threshold_se: float = 4.0
    seeds: tuple[int, int] = field(default=(0, 0))

    @property
    def flagged(self) -> list[MomentRow]:
        return [r for r in self.rows if r.flagged]


def noise_moment_suite(grid: TorusGrid, seeds, mode_list, threshold_se: float = 4.0,
                       chunk: int = 4096) -> MomentReport:
    """Empirical mixed moments ``<xi(k1)...xi(kp)>`` with standard errors.

    A row is flagged when its real or imaginary part deviates from the
    Gaussian (Wick) value by more than ``threshold_se`` standard errors.
    """
    seeds = np.asarray(list(seeds), dtype=np.int64)
    mode_list = [tuple(tuple(int(x) for x in m) for m in t) for t in mode_list]
    if not mode_list:
        raise ConfigurationError("mode list is empty")
    if seeds.size < 100:
        raise ConfigurationError("moment suite needs at least 100 seeds")
    distinct = sorted(set(itertools.chain.from_iterable(mode_list)))
    index = {m: i for i, m in enumerate(distinct)}
    j1 = np.array([m[0] for m in distinct])
    j2 = np.array([m[1] for m in distinct])
    vals = np.concatenate([
        mode_values(grid, seeds[i:i + chunk, None], j1[None, :], j2[None, :]).reshape(-1, len(distinct))
        for i in range(0, seeds.size, chunk)
    ])
    rows = []
    M = seeds.size
    for t in mode_list:
        prod = np.prod(vals[:, [index[m] for m in t]], axis=1)
        mean = complex(prod.mean())
        se = (float(prod.real.std(ddof=1) / np.sqrt(M)), float(prod.imag.std(ddof=1) / np.sqrt(M)))
        exp = wick_expectation(grid, t)
        dev_re = abs(mean.real - exp)
        dev_im = abs(mean.imag)
        flag = bool(dev_re > threshold_se * se[0] + 1e-15 or dev_im > threshold_se * se[1] + 1e-15)
        rows.append(MomentRow(t, mean, se, exp, flag))
    return MomentReport(rows, M, threshold_se, (int(seeds.min()), int(seeds.max())))


def power_law_field(grid: TorusGrid, exponent: float, seed: int, cutoff: float | None = None) -> SpectralField:
    """Gaussian field with ``|c(k)|^2 ~ d(k,0)^(-2 exponent - 5/2)``.

    In the anisotropic scaling (effective dimension 5/2) this spectrum makes
    ``||f_T||`` scale like ``(T^(1/3))^exponent``.  Modes with
    ``d(k,0) > cutoff`` are dropped when a cutoff is given; the mean is zero.
    """
    c = noise_coeffs(grid, [seed])[0]
    d = grid.d0
    keep = d > 0
    if cutoff is not None:
        keep &= d <= cutoff
    safe = np.where(keep, d, 1.0)
    return SpectralField(grid, np.where(keep, c * safe ** (-(exponent + 1.25)), 0.0))
