"""Fourier multipliers, heat semigroup, mollifiers and dealiased products.

Odd symbols (``R``, ``d1``, ``d2`` and anything built from them) are set to
zero on the Nyquist row/column they are odd in: those modes are their own
conjugate partners, so a purely imaginary value there cannot keep the field
real.  For the same reason the projection ``P`` also drops the Nyquist
``k1`` row, which makes ``R**2 = -P`` hold exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np

from .errors import DomainError, InvariantViolation
from .grid import SpectralField, TorusGrid, ensure_same_grid, forward, inverse


@dataclass(frozen=True, eq=False)
class MultiplierSpec:
    """A scalar function on the frequency lattice.

    ``symbol(grid)`` returns an array broadcastable to ``grid.shape``.
    """

    name: str
    symbol: Callable[[TorusGrid], np.ndarray]
    params: tuple = field(default_factory=tuple)

    def on(self, grid: TorusGrid) -> np.ndarray:
        return _evaluate(self, grid)

    def __matmul__(self, other: "MultiplierSpec") -> "MultiplierSpec":
        """Composition (pointwise symbol product)."""
        return MultiplierSpec(
            f"{self.name}*{other.name}",
            lambda g, a=self, b=other: a.on(g) * b.on(g),
            self.params + other.params,
        )


@lru_cache(maxsize=64)
def _evaluate(spec: MultiplierSpec, grid: TorusGrid) -> np.ndarray:
    s = np.broadcast_to(np.asarray(spec.symbol(grid)), grid.shape).copy()
    s.setflags(write=False)
    return s


def _hermitian_ok(grid: TorusGrid, s: np.ndarray) -> bool:
    i1, i2 = grid.neg_index
    scale = float(np.max(np.abs(s), initial=0.0))
    return float(np.max(np.abs(s - np.conj(s[i1, i2])), initial=0.0)) <= 1e-12 * max(scale, 1e-300)


@lru_cache(maxsize=64)
def _checked(spec: MultiplierSpec, grid: TorusGrid) -> np.ndarray:
    s = spec.on(grid)
    if not _hermitian_ok(grid, s):
        raise InvariantViolation(f"symbol {spec.name!r} breaks Hermitian symmetry")
    return s


def apply_multiplier(f: SpectralField, m: MultiplierSpec) -> SpectralField:
    """Multiply every coefficient by the symbol of ``m``."""
    return SpectralField(f.grid, _checked(m, f.grid) * f.coeffs)


# -- elementary symbols -------------------------------------------------------

def _not_nyq1(g: TorusGrid) -> np.ndarray:
    return ~g.nyquist1


def _sgn1(g: TorusGrid) -> np.ndarray:
    return np.sign(g.k1) * _not_nyq1(g)


def _p(g: TorusGrid) -> np.ndarray:
    return ((g.j1 != 0) & _not_nyq1(g)).astype(float)


def _ell(g: TorusGrid) -> np.ndarray:
    a = np.abs(g.k1)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(g.j1 != 0, g.k1**2 + g.k2**2 / np.where(a > 0, a, 1.0), 0.0)
    return out * _p(g)


def _green(g: TorusGrid) -> np.ndarray:
    a = np.abs(g.k1)
    den = a**3 + g.k2**2
    return np.where(g.j1 != 0, a / np.where(den > 0, den, 1.0), 0.0) * _p(g)


def _green_tilde(g: TorusGrid) -> np.ndarray:
    return -_sgn1(g) * g.k2 * ~g.nyquist2 * _green(g)


def _a_symbol(g: TorusGrid) -> np.ndarray:
    return np.abs(g.k1) ** 3 + g.k2**2


def _abs1_power(s: float) -> Callable[[TorusGrid], np.ndarray]:
    def sym(g: TorusGrid) -> np.ndarray:
        a = np.abs(g.k1)
        if s >= 0:
            return a**s
        return np.where(a > 0, np.where(a > 0, a, 1.0) ** s, 0.0)

    return sym


PROJECTION = MultiplierSpec("P", _p)
HILBERT = MultiplierSpec("R", lambda g: 1j * _sgn1(g))
D1 = MultiplierSpec("d1", lambda g: 1j * g.k1 * _not_nyq1(g))
D2 = MultiplierSpec("d2", lambda g: 1j * g.k2 * ~g.nyquist2)
ELL = MultiplierSpec("L", _ell)
GREEN = MultiplierSpec("G", _green)
GREEN_TILDE = MultiplierSpec("Gtilde", _green_tilde)
A_SYMBOL = MultiplierSpec("A", _a_symbol)
D2R = D2 @ HILBERT
D1R = D1 @ HILBERT


def abs_partial1(s: float) -> MultiplierSpec:
    """``|d1|^s``; for ``s < 0`` the ``k1 = 0`` column is set to zero."""
    return MultiplierSpec(f"|d1|^{s}", _abs1_power(float(s)), (("s", float(s)),))


@lru_cache(maxsize=256)
def heat(T: float) -> MultiplierSpec:
    """Semigroup symbol ``psi_T = exp(-T(|k1|^3 + k2^2))``."""
    T = float(T)
    return MultiplierSpec(f"psi_{T:g}", lambda g: np.exp(-T * _a_symbol(g)), (("T", T),))


@lru_cache(maxsize=256)
def heat_x1_kernel(T: float) -> MultiplierSpec:
    """Symbol of ``psi~_T``: ``i d/dk1 psi_T / T^(1/3)``."""
    T = float(T)

    def sym(g: TorusGrid) -> np.ndarray:
        d = -3.0 * T * np.abs(g.k1) * g.k1 * np.exp(-T * _a_symbol(g))
        return 1j * d / T ** (1.0 / 3.0) * _not_nyq1(g)

    return MultiplierSpec(f"psitilde_{T:g}", sym, (("T", T),))


# -- mollifier masks ----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Mask:
    """Profile ``phi_hat(kappa1, kappa2)`` of a mollifier family and its gradient."""

    name: str
    phi: Callable[[np.ndarray, np.ndarray], np.ndarray]
    grad: Callable[[np.ndarray, np.ndarray], tuple[np.ndarray, np.ndarray]]


def _gauss(a, b):
    return np.exp(-(a * a + b * b) / 2.0)


def _gauss_grad(a, b):
    p = _gauss(a, b)
    return -a * p, -b * p


def _quartic(a, b):
    r2 = a * a + b * b
    return np.exp(-(r2 * r2) / 4.0)


def _quartic_grad(a, b):
    r2 = a * a + b * b
    p = np.exp(-(r2 * r2) / 4.0)
    return -r2 * a * p, -r2 * b * p


GAUSSIAN_MASK = Mask("gaussian", _gauss, _gauss_grad)
QUARTIC_MASK = Mask("quartic", _quartic, _quartic_grad)
MASKS = {"gaussian": GAUSSIAN_MASK, "quartic": QUARTIC_MASK}


def _scaled(g: TorusGrid, ell: float) -> tuple[np.ndarray, np.ndarray]:
    return ell * g.k1, ell**1.5 * g.k2


def _check_ell(ell: float) -> float:
    ell = float(ell)
    if not 0.0 < ell <= 1.0:
        raise DomainError(f"mollification scale must lie in (0, 1], got {ell}")
    return ell


@lru_cache(maxsize=128)
def mollifier(ell: float, mask: Mask = GAUSSIAN_MASK) -> MultiplierSpec:
    """``phi_ell(k) = phi_hat(ell*k1, ell^(3/2)*k2)``."""
    ell = _check_ell(ell)
    return MultiplierSpec(
        f"phi_{mask.name}_{ell:g}",
        lambda g: mask.phi(*_scaled(g, ell)),
        (("ell", ell), ("mask", mask.name)),
    )


@lru_cache(maxsize=128)
def mollifier_log_derivative(ell: float, mask: Mask = GAUSSIAN_MASK) -> MultiplierSpec:
    """``ell d/d ell`` of the mollifier symbol."""
    ell = _check_ell(ell)

    def sym(g: TorusGrid) -> np.ndarray:
        a, b = _scaled(g, ell)
        d1, d2 = mask.grad(a, b)
        return a * d1 + 1.5 * b * d2

    return MultiplierSpec(f"dphi_{mask.name}_{ell:g}", sym, (("ell", ell), ("mask", mask.name)))


@lru_cache(maxsize=128)
def mollifier_x1_kernel(ell: float, mask: Mask = GAUSSIAN_MASK) -> MultiplierSpec:
    """Symbol ``i ell (d1 phi_hat)(ell k1, ell^(3/2) k2)`` of ``[x1, (.)_ell]``."""
    ell = _check_ell(ell)

    def sym(g: TorusGrid) -> np.ndarray:
        d1, _ = mask.grad(*_scaled(g, ell))
        return 1j * ell * d1 * _not_nyq1(g)

    return MultiplierSpec(f"x1phi_{mask.name}_{ell:g}", sym, (("ell", ell), ("mask", mask.name)))


def validate_mask(mask: Mask, grid: TorusGrid) -> None:
    """Require a real, even profile with unit value at the origin."""
    a, b = grid.k1 / grid.n1, grid.k2 / grid.n2
    p = np.asarray(mask.phi(a, b))
    q = np.asarray(mask.phi(-a, -b))
    if np.iscomplexobj(p) and np.max(np.abs(p.imag)) > 0:
        raise InvariantViolation(f"mask {mask.name!r} is not real")
    if np.max(np.abs(p - q)) > 1e-14:
        raise InvariantViolation(f"mask {mask.name!r} is not even")
    if abs(complex(mask.phi(np.zeros(1), np.zeros(1))[0]) - 1.0) > 1e-14:
        raise InvariantViolation(f"mask {mask.name!r} does not equal 1 at the origin")


# -- field operations ---------------------------------------------------------

def heat_convolve(f: SpectralField, T: float) -> SpectralField:
    """``f_T = psi_T * f``."""
    if not T > 0:
        raise DomainError(f"semigroup time must be positive, got {T}")
    return apply_multiplier(f, heat(float(T)))


def mollify(f: SpectralField, ell: float, mask: Mask = GAUSSIAN_MASK) -> SpectralField:
    """``f_ell = phi_ell * f``."""
    validate_mask(mask, f.grid)
    return apply_multiplier(f, mollifier(ell, mask))


def _pad_axis(c: np.ndarray, axis: int, m: int) -> np.ndarray:
    n = c.shape[axis]
    h = n // 2
    shape = list(c.shape)
    shape[axis] = m
    out = np.zeros(shape, dtype=complex)

    def sl(a, b):
        idx = [slice(None)] * c.ndim
        idx[axis] = slice(a, b)
        return tuple(idx)

    out[sl(0, h)] = c[sl(0, h)]
    out[sl(m - h + 1, m)] = c[sl(h + 1, n)]
    nyq = 0.5 * c[sl(h, h + 1)]
    out[sl(m - h, m - h + 1)] = nyq
    out[sl(h, h + 1)] = nyq
    return out


def _truncate_axis(c: np.ndarray, axis: int, n: int) -> np.ndarray:
    m = c.shape[axis]
    h = n // 2
    shape = list(c.shape)
    shape[axis] = n
    out = np.empty(shape, dtype=complex)

    def sl(a, b):
        idx = [slice(None)] * c.ndim
        idx[axis] = slice(a, b)
        return tuple(idx)

    out[sl(0, h)] = c[sl(0, h)]
    out[sl(h + 1, n)] = c[sl(m - h + 1, m)]
    out[sl(h, h + 1)] = c[sl(m - h, m - h + 1)] + c[sl(h, h + 1)]
    return out


def pad_coeffs(c: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    """Zero-pad coefficients, splitting Nyquist content evenly between +-n/2."""
    return _pad_axis(_pad_axis(c, -2, shape[0]), -1, shape[1])


def truncate_coeffs(c: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    """Inverse of :func:`pad_coeffs`; content at +-n/2 is folded onto Nyquist."""
    return _truncate_axis(_truncate_axis(c, -2, shape[0]), -1, shape[1])


def fine_grid(grid: TorusGrid) -> TorusGrid:
    return TorusGrid(2 * grid.n1, 2 * grid.n2)


def to_fine_physical(f: SpectralField) -> np.ndarray:
    """Samples of the trigonometric interpolant of ``f`` on the 2x refined grid."""
    fg = fine_grid(f.grid)
    return inverse(fg, pad_coeffs(f.coeffs, fg.shape))


def from_fine_physical(grid: TorusGrid, values: np.ndarray) -> SpectralField:
    fg = fine_grid(grid)
    return SpectralField(grid, truncate_coeffs(forward(fg, values), grid.shape))


def dealiased_product(f: SpectralField, g: SpectralField) -> SpectralField:
    """Fourier coefficients of ``f*g`` computed on a 2x zero-padded grid."""
    grid = ensure_same_grid(f, g)
    return from_fine_physical(grid, to_fine_physical(f) * to_fine_physical(g))
