"""Torus discretization, spectral fields and physical/frequency transforms.

Coefficients are stored in full FFT order on an ``(n1, n2)`` array, axis 0
carrying ``x1`` and axis 1 carrying ``x2``.  The forward transform is
normalized by ``1/(n1*n2)`` so that ``coeffs[k]`` approximates
``int exp(-i k.x) f(x) dx`` over the unit torus.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.fft as sfft

from .errors import ConfigurationError, GridMismatchError, InvariantViolation

TWO_PI = 2.0 * np.pi

_FFT_WORKERS = 1


def set_fft_workers(n: int) -> None:
    """Set the number of threads used by every transform in this process."""
    global _FFT_WORKERS
    if n < 1:
        raise ConfigurationError("FFT worker count must be >= 1")
    _FFT_WORKERS = int(n)


def fft_workers() -> int:
    return _FFT_WORKERS


@dataclass(frozen=True)
class TorusGrid:
    """Uniform ``n1 x n2`` discretization of the unit torus ``[0,1)^2``.

    The frequency lattice is ``{2*pi*(j1, j2) : ji in [-ni/2, ni/2)}``.
    Indices ``j = -ni/2`` form the self-conjugate Nyquist rows/columns.
    """

    n1: int
    n2: int

    def __post_init__(self):
        for n in (self.n1, self.n2):
            if int(n) != n:
                raise ConfigurationError("dimensions must be integers")
            if n % 2:
                raise ConfigurationError("dimensions must be even")
            if n < 4:
                raise ConfigurationError("dimensions must be at least 4")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n1, self.n2)

    @property
    def size(self) -> int:
        return self.n1 * self.n2

    @cached_property
    def j1(self) -> np.ndarray:
        """Signed integer x1 frequency index, shape ``(n1, 1)``."""
        return np.rint(np.fft.fftfreq(self.n1, 1.0 / self.n1)).astype(np.int64)[:, None]

    @cached_property
    def j2(self) -> np.ndarray:
        """Signed integer x2 frequency index, shape ``(1, n2)``."""
        return np.rint(np.fft.fftfreq(self.n2, 1.0 / self.n2)).astype(np.int64)[None, :]

    @cached_property
    def k1(self) -> np.ndarray:
        return TWO_PI * self.j1.astype(float)

    @cached_property
    def k2(self) -> np.ndarray:
        return TWO_PI * self.j2.astype(float)

    @cached_property
    def nyquist1(self) -> np.ndarray:
        """Boolean mask (n1, 1) of the self-conjugate x1 Nyquist row."""
        return self.j1 == -(self.n1 // 2)

    @cached_property
    def nyquist2(self) -> np.ndarray:
        return self.j2 == -(self.n2 // 2)

    @cached_property
    def neg_index(self) -> tuple[np.ndarray, np.ndarray]:
        """Index arrays mapping each mode k to the storage slot of -k."""
        i1 = (-np.arange(self.n1)) % self.n1
        i2 = (-np.arange(self.n2)) % self.n2
        return i1[:, None], i2[None, :]

    @cached_property
    def d0(self) -> np.ndarray:
        """Anisotropic frequency size ``d(k,0) = |k1| + |k2|^(2/3)``, full shape."""
        return np.abs(self.k1) + np.abs(self.k2) ** (2.0 / 3.0)

    def frequencies(self) -> list[tuple[float, float]]:
        """Deterministic enumeration of the lattice, sorted by ``(j1, j2)``."""
        a = np.arange(-(self.n1 // 2), self.n1 // 2)
        b = np.arange(-(self.n2 // 2), self.n2 // 2)
        return [(TWO_PI * x, TWO_PI * y) for x in a for y in b]

    def coordinates(self) -> tuple[np.ndarray, np.ndarray]:
        """Physical sample points ``x1 = i1/n1`` (column) and ``x2 = i2/n2`` (row)."""
        return (np.arange(self.n1)[:, None] / self.n1, np.arange(self.n2)[None, :] / self.n2)

    def slot(self, j1: int, j2: int) -> tuple[int, int]:
        """Storage index of the integer mode ``(j1, j2)``; wraps modulo the grid."""
        return (j1 % self.n1, j2 % self.n2)


def make_grid(n1: int, n2: int) -> TorusGrid:
    return TorusGrid(int(n1), int(n2))


def hermitian_defect(grid: TorusGrid, coeffs: np.ndarray) -> float:
    """Largest ``|c(k) - conj(c(-k))|`` over the lattice."""
    i1, i2 = grid.neg_index
    return float(np.max(np.abs(coeffs - np.conj(coeffs[i1, i2])), initial=0.0))


def symmetrize(grid: TorusGrid, coeffs: np.ndarray) -> np.ndarray:
    """Project onto exactly Hermitian coefficient arrays."""
    i1, i2 = grid.neg_index
    return 0.5 * (coeffs + np.conj(coeffs[i1, i2]))


def forward(grid: TorusGrid, values: np.ndarray) -> np.ndarray:
    """Real physical samples to normalized, exactly Hermitian coefficients."""
    values = np.asarray(values, dtype=float)
    if values.shape[-2:] != grid.shape:
        raise GridMismatchError(f"array shape {values.shape} does not match grid {grid.shape}")
    half = sfft.rfft2(values, workers=_FFT_WORKERS) / grid.size
    h2 = grid.n2 // 2
    full = np.empty(values.shape[:-2] + grid.shape, dtype=complex)
    full[..., : h2 + 1] = half
    i1 = grid.neg_index[0][:, 0]
    full[..., h2 + 1:] = np.conj(half[..., i1, 1:h2][..., ::-1])
    i1, i2 = grid.neg_index
    return 0.5 * (full + np.conj(full[..., i1, i2]))


def inverse(grid: TorusGrid, coeffs: np.ndarray) -> np.ndarray:
    """Hermitian coefficients to real physical samples."""
    h2 = grid.n2 // 2
    return sfft.irfft2(coeffs[..., : h2 + 1] * grid.size, s=grid.shape, workers=_FFT_WORKERS)


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Immutable Fourier representation of a real periodic field.

    Parameters
    ----------
    grid : TorusGrid
    coeffs : ndarray, complex, shape ``grid.shape``
        Normalized Fourier coefficients in FFT order.  They must satisfy
        ``coeffs[-k] == conj(coeffs[k])`` up to ``1e-10`` relative.
    """

    grid: TorusGrid
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex)
        if c.shape != self.grid.shape:
            raise GridMismatchError(f"coefficient shape {c.shape} does not match grid {self.grid.shape}")
        scale = float(np.max(np.abs(c), initial=0.0))
        if hermitian_defect(self.grid, c) > 1e-10 * max(scale, 1e-300):
            raise InvariantViolation("coefficients are not Hermitian: field would not be real")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def from_physical(cls, grid: TorusGrid, values: np.ndarray) -> "SpectralField":
        return cls(grid, forward(grid, values))

    @classmethod
    def zeros(cls, grid: TorusGrid) -> "SpectralField":
        return cls(grid, np.zeros(grid.shape, dtype=complex))

    @classmethod
    def from_modes(cls, grid: TorusGrid, modes: dict[tuple[int, int], complex]) -> "SpectralField":
        """Build a field from integer modes ``(j1, j2) -> amplitude``.

        Conjugate partners are filled in automatically; giving both a mode
        and its partner is allowed only when they are consistent.
        """
        c = np.zeros(grid.shape, dtype=complex)
        for (a, b), amp in modes.items():
            s = grid.slot(a, b)
            p = grid.slot(-a, -b)
            if s == p:
                if abs(complex(amp).imag) > 0:
                    raise InvariantViolation(f"self-conjugate mode {(a, b)} must be real")
                c[s] = complex(amp).real
                continue
            c[s] = amp
            c[p] = np.conj(amp)
        for (a, b), amp in modes.items():
            if abs(c[grid.slot(a, b)] - amp) > 1e-15 * max(1.0, abs(amp)):
                raise InvariantViolation(f"mode {(a, b)} conflicts with its conjugate partner")
        return cls(grid, c)

    def physical(self) -> np.ndarray:
        return inverse(self.grid, self.coeffs)

    def mode(self, j1: int, j2: int) -> complex:
        return complex(self.coeffs[self.grid.slot(j1, j2)])

    def sup_norm(self) -> float:
        """Sup over the physical grid."""
        return float(np.max(np.abs(self.physical())))

    def spectral_sup(self) -> float:
        """Spectral infinity norm ``max_k |coeffs(k)|``."""
        return float(np.max(np.abs(self.coeffs)))

    def x1_mean_free(self, tol: float = 1e-12) -> bool:
        """True when the ``k1 = 0`` column vanishes relative to the field size."""
        col = np.max(np.abs(self.coeffs[0, :]))
        return bool(col <= tol * max(self.spectral_sup(), 1e-300))

    def _check(self, other: "SpectralField") -> None:
        if self.grid != other.grid:
            raise GridMismatchError(f"grids {self.grid.shape} and {other.grid.shape} differ")

    def __add__(self, other):
        if isinstance(other, SpectralField):
            self._check(other)
            return SpectralField(self.grid, self.coeffs + other.coeffs)
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, SpectralField):
            self._check(other)
            return SpectralField(self.grid, self.coeffs - other.coeffs)
        return NotImplemented

    def __neg__(self):
        return SpectralField(self.grid, -self.coeffs)

    def __mul__(self, scalar):
        if isinstance(scalar, (int, float, np.floating, np.integer)):
            return SpectralField(self.grid, float(scalar) * self.coeffs)
        return NotImplemented

    __rmul__ = __mul__


def ensure_same_grid(*fields: SpectralField) -> TorusGrid:
    grid = fields[0].grid
    for f in fields[1:]:
        if f.grid != grid:
            raise GridMismatchError(f"grids {grid.shape} and {f.grid.shape} differ")
    return grid
