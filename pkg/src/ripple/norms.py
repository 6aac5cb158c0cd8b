"""Anisotropic metric, Hoelder seminorm estimators and commutators.

Positive exponents are estimated directly from pairs of grid points.
Negative exponents use the semigroup characterization
``sup_T (T^(1/3))^(-beta) ||psi_T * f||_inf``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .grid import SpectralField, TorusGrid, ensure_same_grid
from .symbols import (
    D1,
    GAUSSIAN_MASK,
    HILBERT,
    Mask,
    apply_multiplier,
    dealiased_product,
    heat,
    heat_x1_kernel,
    mollifier,
    mollifier_x1_kernel,
    validate_mask,
)


@dataclass
class HolderEstimate:
    """A (semi)norm estimate with the metadata needed to reproduce it."""

    variant: str
    exponent: float
    value: float
    metadata: dict = field(default_factory=dict)

    def to_row(self, field_id: str = "") -> dict:
        return {
            "variant": self.variant,
            "exponent": self.exponent,
            "value": self.value,
            "field_id": field_id,
            "metadata": self.metadata,
        }


# -- metric -------------------------------------------------------------------

def _per(t):
    t = np.asarray(t, dtype=float)
    return np.abs(t - np.round(t))


def cc_distance(x, y) -> np.ndarray | float:
    """``d(x,y) = |x1-y1|_per + |x2-y2|_per^(2/3)`` on the unit torus.

    ``x`` and ``y`` are ``(..., 2)`` arrays or pairs; inputs broadcast.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    d = _per(x[..., 0] - y[..., 0]) + _per(x[..., 1] - y[..., 1]) ** (2.0 / 3.0)
    return float(d) if np.ndim(d) == 0 else d


def shift_distance(grid: TorusGrid, s1, s2) -> np.ndarray:
    """``d(0, h)`` for integer grid shifts, computed from integer offsets."""
    a1 = np.abs((np.asarray(s1) + grid.n1 // 2) % grid.n1 - grid.n1 // 2)
    a2 = np.abs((np.asarray(s2) + grid.n2 // 2) % grid.n2 - grid.n2 // 2)
    return a1 / grid.n1 + (a2 / grid.n2) ** (2.0 / 3.0)


def signed_shift(n: int, s) -> np.ndarray:
    """Minimal-image representative in ``[-n/2, n/2)``."""
    return (np.asarray(s) + n // 2) % n - n // 2


# -- positive exponents -------------------------------------------------------

@dataclass(frozen=True)
class PairPlan:
    """How pairs ``(x, y)`` are chosen for :func:`holder_pos`.

    ``exhaustive`` visits every pair exactly (with bound-based pruning);
    ``stratified`` draws ``n_pairs`` random pairs spread over dyadic
    distance shells using ``seed``.
    """

    kind: str = "exhaustive"
    n_pairs: int = 100_000
    seed: int = 0

    @classmethod
    def default_for(cls, grid: TorusGrid) -> "PairPlan":
        if grid.size <= 32 * 32:
            return cls("exhaustive")
        return cls("stratified")


def _check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not 0.0 < alpha < 1.5:
        raise DomainError(f"positive Hoelder exponent must lie in (0, 3/2), got {alpha}")
    return alpha


def _pair_quotients(values, d1f, alpha, i1, i2, s1, s2, grid):
    """Difference quotients for base points ``(i1, i2)`` and shifts ``(s1, s2)``."""
    y = values[(i1 + s1) % grid.n1, (i2 + s2) % grid.n2]
    diff = y - values[i1, i2]
    if d1f is not None:
        diff = diff - d1f[i1, i2] * (signed_shift(grid.n1, s1) / grid.n1)
    return np.abs(diff) / shift_distance(grid, s1, s2) ** alpha


def _field_arrays(f: SpectralField, alpha: float):
    values = f.physical()
    d1f = apply_multiplier(f, D1).physical() if alpha > 1.0 else None
    return values, d1f


def holder_pos_pairs(f: SpectralField, alpha: float, i1, i2, s1, s2) -> float:
    """Max difference quotient over explicit pairs ``x = i/n``, ``y = x + s/n``."""
    alpha = _check_alpha(alpha)
    values, d1f = _field_arrays(f, alpha)
    i1, i2, s1, s2 = (np.asarray(a, dtype=np.int64) for a in (i1, i2, s1, s2))
    keep = (signed_shift(f.grid.n1, s1) != 0) | (signed_shift(f.grid.n2, s2) != 0)
    if not np.any(keep):
        return 0.0
    q = _pair_quotients(values, d1f, alpha, i1[keep], i2[keep], s1[keep], s2[keep], f.grid)
    return float(np.max(q))


def holder_pos_reference(f: SpectralField, alpha: float) -> float:
    """Direct double loop over all point pairs; only meant for small grids."""
    alpha = _check_alpha(alpha)
    values, d1f = _field_arrays(f, alpha)
    g = f.grid
    best = 0.0
    for a1 in range(g.n1):
        for a2 in range(g.n2):
            s1 = signed_shift(g.n1, np.arange(g.n1)[:, None] - a1)
            s2 = signed_shift(g.n2, np.arange(g.n2)[None, :] - a2)
            d = np.abs(s1) / g.n1 + (np.abs(s2) / g.n2) ** (2.0 / 3.0)
            diff = values - values[a1, a2]
            if d1f is not None:
                diff = diff - d1f[a1, a2] * (s1 / g.n1)
            d[a1, a2] = np.inf
            best = max(best, float(np.max(np.abs(diff) / d**alpha)))
    return best


def _exhaustive(values, d1f, alpha, grid, chunk_elems=1 << 21):
    n1, n2 = grid.shape
    s1, s2 = np.meshgrid(np.arange(-(n1 // 2), n1 // 2), np.arange(-(n2 // 2), n2 // 2), indexing="ij")
    s1, s2 = s1.ravel(), s2.ravel()
    nz = (s1 != 0) | (s2 != 0)
    s1, s2 = s1[nz], s2[nz]
    d = shift_distance(grid, s1, s2)
    order = np.argsort(d, kind="stable")
    s1, s2, d = s1[order], s2[order], d[order]
    osc = float(values.max() - values.min())
    slope = float(np.max(np.abs(d1f))) if d1f is not None else 0.0
    bound = (osc + slope * np.abs(s1) / n1) / d**alpha
    i1 = np.arange(n1)[:, None]
    i2 = np.arange(n2)[None, :]
    best = 0.0
    visited = 0
    step = max(1, chunk_elems // grid.size)
    pos = 0
    while pos < s1.size:
        cand = np.nonzero(bound[pos:pos + step] > best)[0] + pos
        pos += step
        if cand.size == 0:
            if not np.any(bound[pos:] > best):
                break
            continue
        a = s1[cand][:, None, None]
        b = s2[cand][:, None, None]
        q = _pair_quotients(values, d1f, alpha, i1[None], i2[None], a, b, grid)
        best = max(best, float(q.max()))
        visited += cand.size
    return best, {"plan": "exhaustive", "shifts_visited": int(visited), "shifts_total": int(s1.size)}


def _stratified(values, d1f, alpha, grid, plan: PairPlan):
    n1, n2 = grid.shape
    rng = np.random.default_rng(plan.seed)
    dmin = min(1.0 / n1, (1.0 / n2) ** (2.0 / 3.0))
    dmax = 0.5 + 0.5 ** (2.0 / 3.0)
    shells = int(math.ceil(math.log2(dmax / dmin))) + 1
    per_shell = max(1, plan.n_pairs // shells)
    best = 0.0
    used = 0
    for m in range(shells):
        hi = dmax * 2.0**-m
        lo = hi / 2.0
        b1 = min(n1 // 2, int(math.floor(hi * n1)))
        b2 = min(n2 // 2, int(math.floor(hi**1.5 * n2)))
        got = 0
        for _ in range(8):
            if got >= per_shell:
                break
            k = 4 * (per_shell - got)
            s1 = rng.integers(-b1, b1 + 1, size=k)
            s2 = rng.integers(-b2, b2 + 1, size=k)
            dd = shift_distance(grid, s1, s2)
            ok = (dd > lo) & (dd <= hi) if m + 1 < shells else (dd > 0) & (dd <= hi)
            s1, s2 = s1[ok][: per_shell - got], s2[ok][: per_shell - got]
            if s1.size == 0:
                continue
            x1 = rng.integers(0, n1, size=s1.size)
            x2 = rng.integers(0, n2, size=s1.size)
            q = _pair_quotients(values, d1f, alpha, x1, x2, s1, s2, grid)
            best = max(best, float(q.max()))
            got += s1.size
        used += got
    return best, {"plan": "stratified", "n_pairs": int(used), "seed": plan.seed, "shells": shells}


def holder_pos(f: SpectralField, alpha: float, plan: PairPlan | None = None) -> HolderEstimate:
    """Positive-exponent seminorm ``[f]_alpha`` estimated on grid pairs.

    For ``alpha <= 1`` the plain difference ``|f(y) - f(x)|`` is used; for
    ``1 < alpha < 3/2`` the first-order Taylor term in ``x1`` is removed,
    ``|f(y) - f(x) - d1f(x)(y1 - x1)|``, with ``y1 - x1`` the minimal-image
    displacement.
    """
    alpha = _check_alpha(alpha)
    plan = plan or PairPlan.default_for(f.grid)
    values, d1f = _field_arrays(f, alpha)
    if plan.kind == "exhaustive":
        value, meta = _exhaustive(values, d1f, alpha, f.grid)
    elif plan.kind == "stratified":
        value, meta = _stratified(values, d1f, alpha, f.grid, plan)
    else:
        raise DomainError(f"unknown pair plan {plan.kind!r}")
    meta["grid"] = list(f.grid.shape)
    return HolderEstimate("direct-positive", alpha, value, meta)


# -- negative exponents -------------------------------------------------------

_EXCLUDED = (-1.0, -0.5)


def _check_beta(beta: float) -> float:
    beta = float(beta)
    if not -1.5 < beta < 0.0:
        raise DomainError(f"negative Hoelder exponent must lie in (-3/2, 0), got {beta}")
    for e in _EXCLUDED:
        if abs(beta - e) < 1e-12:
            raise DomainError(
                f"beta = {beta} excluded: the semigroup characterization of negative "
                "Hoelder norms fails at beta in {-1, -1/2}"
            )
    return beta


def edge_symbol(grid: TorusGrid) -> float:
    """Smallest value of ``|k1|^3 + k2^2`` on the boundary of the frequency box."""
    return min((np.pi * grid.n1) ** 3, (np.pi * grid.n2) ** 2)


def dyadic_T_grid(grid: TorusGrid) -> list[float]:
    """``T = 2^-n``, ``n = 0..3 log2(min(n1, n2))``, keeping only resolvable ``T``.

    ``T`` is resolvable when ``psi_T`` has decayed by at least ``e^-1`` at the
    edge of the frequency box.
    """
    nmax = int(3 * math.log2(min(grid.n1, grid.n2)))
    a = edge_symbol(grid)
    return [2.0**-n for n in range(nmax + 1) if 2.0**-n * a >= 1.0]


def resolved_T_window(grid: TorusGrid) -> list[float]:
    """Dyadic ``T`` where both lattice ends are negligible for scaling fits.

    Lower end: resolvable as in :func:`dyadic_T_grid`.  Upper end: the
    smoothing length ``T^(1/3)`` stays below half the longest wavelength
    divided by ``2 pi``, i.e. ``2 pi T^(1/3) <= 1/2``.
    """
    t_max = (4.0 * np.pi) ** -3
    return [T for T in dyadic_T_grid(grid) if T <= t_max]


def holder_neg_semigroup(f: SpectralField, beta: float, T_grid=None) -> HolderEstimate:
    """``sup_T (T^(1/3))^(-beta) ||f_T||_inf`` over a dyadic set of ``T``."""
    beta = _check_beta(beta)
    T_grid = list(T_grid) if T_grid is not None else dyadic_T_grid(f.grid)
    if not T_grid or any(not 0 < T <= 1 for T in T_grid):
        raise DomainError("T grid must be a nonempty subset of (0, 1]")
    vals = [T ** (-beta / 3.0) * apply_multiplier(f, heat(T)).sup_norm() for T in T_grid]
    i = int(np.argmax(vals))
    return HolderEstimate(
        "semigroup-negative",
        beta,
        float(vals[i]),
        {"T_grid": T_grid, "per_T": [float(v) for v in vals], "argmax_T": T_grid[i]},
    )


def holder_neg_mollifier(f: SpectralField, beta: float, ells=None, mask: Mask = GAUSSIAN_MASK) -> HolderEstimate:
    """``sup_ell ell^(-beta) ||f_ell||_inf`` over dyadic mollification scales."""
    beta = _check_beta(beta)
    if ells is None:
        ells = [2.0**-n for n in range(int(math.log2(min(f.grid.n1, f.grid.n2))) + 1)]
    vals = [ell ** (-beta) * apply_multiplier(f, mollifier(ell, mask)).sup_norm() for ell in ells]
    i = int(np.argmax(vals))
    return HolderEstimate("mollifier-negative", beta, float(vals[i]),
                          {"ell_grid": list(ells), "argmax_ell": ells[i], "mask": mask.name})


# -- commutators --------------------------------------------------------------

def commutator_conv(u: SpectralField, f: SpectralField, ell: float, mask: Mask = GAUSSIAN_MASK) -> SpectralField:
    """``[u, (.)_ell] f = u f_ell - (u f)_ell``."""
    ensure_same_grid(u, f)
    validate_mask(mask, f.grid)
    phi = mollifier(ell, mask)
    return dealiased_product(u, apply_multiplier(f, phi)) - apply_multiplier(dealiased_product(u, f), phi)


def mollifier_x1_commutator(f: SpectralField, ell: float, mask: Mask = GAUSSIAN_MASK) -> SpectralField:
    """``[x1, (.)_ell] f``: convolution with ``x1 phi_ell``."""
    return apply_multiplier(f, mollifier_x1_kernel(ell, mask))


def corrected_commutator(u: SpectralField, f: SpectralField, ell: float, mask: Mask = GAUSSIAN_MASK) -> SpectralField:
    """``[u, (.)_ell] f - d1u [x1, (.)_ell] f``, the variant used for ``alpha > 1``."""
    d1u = apply_multiplier(u, D1)
    return commutator_conv(u, f, ell, mask) - dealiased_product(d1u, mollifier_x1_commutator(f, ell, mask))


def x1_commutator(f: SpectralField, T: float) -> SpectralField:
    """``x1 f_T - (x1 f)_T = T^(1/3) (psi~_T * f)``."""
    if not T > 0:
        raise DomainError(f"semigroup time must be positive, got {T}")
    return T ** (1.0 / 3.0) * apply_multiplier(f, heat_x1_kernel(float(T)))


@dataclass
class HilbertRatioReport:
    alpha: float
    eps: float
    ratios: list[float]
    bound: float

    @property
    def flagged(self) -> list[int]:
        return [i for i, r in enumerate(self.ratios) if r > self.bound]

    @property
    def max_ratio(self) -> float:
        return max(self.ratios) if self.ratios else 0.0


def hilbert_holder_check(fields, alpha: float, eps: float, bound: float = 10.0,
                         plan: PairPlan | None = None) -> HilbertRatioReport:
    """Ratios ``[Rf]_{alpha-eps} / [f]_alpha`` over a battery of fields."""
    if isinstance(fields, SpectralField):
        fields = [fields]
    _check_alpha(alpha)
    _check_alpha(alpha - eps)
    ratios = []
    for f in fields:
        if not f.x1_mean_free(1e-10):
            raise DomainError("Hilbert check needs fields with vanishing x1-average")
        den = holder_pos(f, alpha, plan).value
        num = holder_pos(apply_multiplier(f, HILBERT), alpha - eps, plan).value
        ratios.append(num / den if den > 0 else 0.0)
    return HilbertRatioReport(float(alpha), float(eps), ratios, float(bound))
