"""Brute-force reference implementations used to freeze expected values.

Everything here works on explicit loops over modes or grid points and
shares no code with the package beyond the grid layout.
"""

from __future__ import annotations

import math
from collections import defaultdict

import numpy as np

TWO_PI = 2.0 * math.pi

# -- mode dictionaries -------------------------------------------------------
# A field is a dict (j1, j2) -> complex coefficient, containing both k and -k.


def hermitian(modes: dict) -> dict:
    out = dict(modes)
    for (a, b), c in modes.items():
        out[(-a, -b)] = np.conj(c)
    return out


def sgn(x):
    return (x > 0) - (x < 0)


def mult(modes: dict, symbol) -> dict:
    return {j: symbol(*j) * c for j, c in modes.items()}


def convolve(a: dict, b: dict, n1: int, n2: int) -> dict:
    """Coefficients of the pointwise product, keeping modes strictly inside the box."""
    out = defaultdict(complex)
    for (p1, p2), x in a.items():
        for (q1, q2), y in b.items():
            j = (p1 + q1, p2 + q2)
            if abs(j[0]) < n1 // 2 and abs(j[1]) < n2 // 2:
                out[j] += x * y
    return dict(out)


def add(*terms) -> dict:
    out = defaultdict(complex)
    for scale, m in terms:
        for j, c in m.items():
            out[j] += scale * c
    return dict(out)


def d2r(j1, j2):
    return -TWO_PI * j2 * sgn(j1)


def d1r(j1, j2):
    return -TWO_PI * abs(j1)


def proj(j1, j2):
    return 0.0 if j1 == 0 else 1.0


def green(j1, j2):
    if j1 == 0:
        return 0.0
    k1, k2 = TWO_PI * abs(j1), TWO_PI * j2
    return k1 / (k1**3 + k2**2)


def to_array(modes: dict, n1: int, n2: int) -> np.ndarray:
    c = np.zeros((n1, n2), dtype=complex)
    for (a, b), v in modes.items():
        c[a % n1, b % n2] += v
    return c


def offline_product(v: dict, n1: int, n2: int) -> dict:
    return mult(convolve(v, mult(v, d2r), n1, n2), proj)


def psi(v: dict, w: dict, sigma: float, n1: int, n2: int) -> dict:
    sv = mult(v, lambda *_: sigma)
    u = add((1.0, w), (1.0, sv))
    u2 = convolve(u, u, n1, n2)
    return add(
        (1.0, convolve(sv, mult(w, d2r), n1, n2)),
        (1.0, convolve(w, mult(sv, d2r), n1, n2)),
        (1.0, convolve(w, mult(w, d2r), n1, n2)),
        (0.5, mult(u2, d2r)),
        (-0.5, convolve(u, mult(u2, d1r), n1, n2)),
    )


def phi(F: dict, v: dict, w: dict, sigma: float, n1: int, n2: int) -> dict:
    rhs = add((sigma**2, F), (1.0, psi(v, w, sigma, n1, n2)))
    return mult(rhs, lambda a, b: -green(a, b))


# -- direct DFT ----------------------------------------------------------------


def dft_coeffs(values: np.ndarray) -> np.ndarray:
    """Normalized coefficients by the defining double sum."""
    n1, n2 = values.shape
    x1 = np.arange(n1) / n1
    x2 = np.arange(n2) / n2
    out = np.zeros((n1, n2), dtype=complex)
    for a in range(n1):
        ja = a if a < n1 // 2 else a - n1
        for b in range(n2):
            jb = b if b < n2 // 2 else b - n2
            phase = np.exp(-1j * TWO_PI * (ja * x1[:, None] + jb * x2[None, :]))
            out[a, b] = np.sum(values * phase) / values.size
    return out


def spectral_d1(values: np.ndarray) -> np.ndarray:
    """Spectral x1-derivative by explicit synthesis, Nyquist row dropped."""
    n1, n2 = values.shape
    c = dft_coeffs(values)
    x1 = np.arange(n1)[:, None] / n1
    x2 = np.arange(n2)[None, :] / n2
    out = np.zeros((n1, n2), dtype=complex)
    for a in range(n1):
        ja = a if a < n1 // 2 else a - n1
        if ja == -n1 // 2:
            continue
        for b in range(n2):
            jb = b if b < n2 // 2 else b - n2
            out += 1j * TWO_PI * ja * c[a, b] * np.exp(1j * TWO_PI * (ja * x1 + jb * x2))
    return out.real


# -- Holder seminorm -------------------------------------------------------------


def periodic(t: float) -> float:
    t = t % 1.0
    return min(t, 1.0 - t)


def holder_brute(values: np.ndarray, alpha: float) -> float:
    """Supremum over all ordered grid pairs of the (corrected) difference quotient."""
    n1, n2 = values.shape
    d1f = spectral_d1(values) if alpha > 1 else None
    best = 0.0
    for a in range(n1):
        for b in range(n2):
            for c in range(n1):
                for e in range(n2):
                    if a == c and b == e:
                        continue
                    # minimal image in [-1/2, 1/2)
                    t1 = ((c - a + n1 // 2) % n1 - n1 // 2) / n1
                    d = periodic((c - a) / n1) + periodic((e - b) / n2) ** (2.0 / 3.0)
                    diff = values[c, e] - values[a, b]
                    if d1f is not None:
                        diff -= d1f[a, b] * t1
                    best = max(best, abs(diff) / d**alpha)
    return best


# -- Philox4x32-10 on Python integers ----------------------------------------------


def philox_scalar(ctr, key, rounds=10):
    M0, M1, W0, W1, mask = 0xD2511F53, 0xCD9E8D57, 0x9E3779B9, 0xBB67AE85, 0xFFFFFFFF
    c = list(ctr)
    k0, k1 = key
    for r in range(rounds):
        p0, p1 = M0 * c[0], M1 * c[2]
        c = [(p1 >> 32) ^ c[1] ^ k0, p1 & mask, (p0 >> 32) ^ c[3] ^ k1, p0 & mask]
        k0, k1 = (k0 + W0) & mask, (k1 + W1) & mask
    return tuple(c)


def normal_pair_scalar(seed, a, b):
    """Box-Muller on 53-bit uniforms built from one Philox block."""
    key = (seed & 0xFFFFFFFF, (seed >> 32) & 0xFFFFFFFF)
    x = philox_scalar((a & 0xFFFFFFFF, b & 0xFFFFFFFF, 0, 0), key)
    u1 = ((x[0] >> 5) * 67108864 + (x[1] >> 6)) / 2.0**53
    u2 = ((x[2] >> 5) * 67108864 + (x[3] >> 6)) / 2.0**53
    r = math.sqrt(-2.0 * math.log1p(-u1))
    return r * math.cos(2 * math.pi * u2), r * math.sin(2 * math.pi * u2)
