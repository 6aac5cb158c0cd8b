"""Picard iteration for the remainder ``w`` with ``u = sigma v_ell + w``."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, NonContractionError, RippleError
from .grid import SpectralField, ensure_same_grid
from .noise import NoiseSample
from .norms import PairPlan, holder_neg_semigroup, holder_pos
from .operators import nonlinear_rhs_psi, offline_product, solve_linear
from .symbols import ELL, GAUSSIAN_MASK, GREEN, PROJECTION, Mask, apply_multiplier, mollify


@dataclass(frozen=True)
class FixedPointConfig:
    """Parameters of a single fixed-point solve.

    ``tol`` bounds the spectral infinity norm of the iterate change.  A solve
    only counts as converged once the equation residual is also below
    ``residual_factor * tol``.
    """

    sigma: float
    ell: float = 1.0 / 16.0
    tol: float = 1e-10
    max_iter: int = 500
    eps: float = 0.05
    growth_window: int = 5
    residual_factor: float = 10.0

    def __post_init__(self):
        if not self.tol > 0:
            raise ConfigurationError("tol must be positive")
        if self.max_iter < 1:
            raise ConfigurationError("max_iter must be >= 1")
        if not 0.0 < self.eps < 0.125:
            raise ConfigurationError("eps must lie in (0, 1/8)")
        if self.sigma < 0:
            raise ConfigurationError("sigma must be nonnegative")
        if not 0.0 < self.ell <= 1.0:
            raise ConfigurationError("ell must lie in (0, 1]")
        if self.growth_window < 1:
            raise ConfigurationError("growth_window must be >= 1")

    def with_sigma(self, sigma: float) -> "FixedPointConfig":
        return FixedPointConfig(sigma, self.ell, self.tol, self.max_iter, self.eps,
                                self.growth_window, self.residual_factor)


@dataclass
class FixedPointReport:
    w: SpectralField
    u: SpectralField
    iterations: int
    converged: bool
    residual_history: list[float]
    contraction_estimates: list[float]
    equation_residual: float
    holder_proxies: dict = field(default_factory=dict)


def phi_map(F: SpectralField, v: SpectralField, w: SpectralField, sigma: float) -> SpectralField:
    """``Phi(F, v, w) = -L^-1 P (sigma^2 F + Psi(v, w))``."""
    ensure_same_grid(F, v, w)
    return -apply_multiplier(sigma**2 * F + nonlinear_rhs_psi(v, w, sigma), GREEN)


def fixed_point_equation_residual(F: SpectralField, v: SpectralField, w: SpectralField, sigma: float) -> float:
    """``|| L w + P(sigma^2 F + Psi(v, w)) ||`` in the spectral infinity norm.

    When ``v = G xi_ell`` and ``F = P(v d2R v)`` this is the Euler-Lagrange
    residual of ``u = sigma v + w``.
    """
    r = apply_multiplier(w, ELL) + apply_multiplier(sigma**2 * F + nonlinear_rhs_psi(v, w, sigma), PROJECTION)
    return r.spectral_sup()


def holder_proxies(F: SpectralField, v: SpectralField, w: SpectralField, eps: float,
                   plan: PairPlan | None = None) -> dict:
    """``[w]_{5/4-2eps}``, ``[v]_{3/4-eps}`` and ``[F]_{-3/4-eps}`` estimates."""
    plan = plan or PairPlan("exhaustive")
    return {
        "w": holder_pos(w, 1.25 - 2 * eps, plan).value,
        "v": holder_pos(v, 0.75 - eps, plan).value,
        "F": holder_neg_semigroup(F, -0.75 - eps).value,
    }


def solve_fixed_point(F: SpectralField, v: SpectralField, cfg: FixedPointConfig,
                      w0: SpectralField | None = None, proxies: bool = False) -> FixedPointReport:
    """Iterate ``w <- Phi(F, v, w)`` from ``w0`` (default 0).

    Raises
    ------
    NonContractionError
        When the iterate change grows ``cfg.growth_window`` times in a row
        or becomes non-finite.
    """
    grid = ensure_same_grid(F, v)
    w = SpectralField.zeros(grid) if w0 is None else w0
    changes: list[float] = []
    rates: list[float] = []
    growth = 0
    converged = False
    residual = math.inf
    n = 0
    for n in range(1, cfg.max_iter + 1):
        # a diverging iterate may overflow; that is caught as a non-finite change below
        with np.errstate(over="ignore", invalid="ignore"):
            w_next = phi_map(F, v, w, cfg.sigma)
            change = (w_next - w).spectral_sup()
        w = w_next
        if not math.isfinite(change):
            raise NonContractionError("iterate change is not finite", changes)
        if changes:
            rates.append(change / changes[-1] if changes[-1] > 0 else 0.0)
            growth = growth + 1 if change > changes[-1] else 0
        changes.append(change)
        if growth >= cfg.growth_window:
            raise NonContractionError(
                f"iterate change grew {growth} times in a row at sigma={cfg.sigma:g}", changes)
        if change < cfg.tol:
            residual = fixed_point_equation_residual(F, v, w, cfg.sigma)
            if residual <= cfg.residual_factor * cfg.tol:
                converged = True
                break
    if not converged:
        residual = fixed_point_equation_residual(F, v, w, cfg.sigma)
    u = cfg.sigma * v + w
    report = FixedPointReport(w, u, n, converged, changes, rates, residual)
    if proxies:
        report.holder_proxies = holder_proxies(F, v, w, cfg.eps)
    return report


def data_from_noise(xi, ell: float, mask: Mask = GAUSSIAN_MASK) -> tuple[SpectralField, SpectralField]:
    """``(F^ell, v_ell)`` for a noise realization."""
    field_ = xi.field if isinstance(xi, NoiseSample) else xi
    v_ell = mollify(solve_linear(field_), ell, mask)
    return offline_product(v_ell), v_ell


@dataclass
class ThresholdResult:
    sigma0: float
    bracket: tuple[float, float]
    anomalous: bool
    evaluations: int

    def __float__(self) -> float:
        return self.sigma0


def _converges(F, v, cfg: FixedPointConfig) -> bool:
    try:
        return solve_fixed_point(F, v, cfg).converged
    except NonContractionError:
        return False


def sigma_threshold_search(xi, ell: float, template: FixedPointConfig, mask: Mask = GAUSSIAN_MASK,
                           rel_width: float = 1e-3, sigma_floor: float = 1e-8) -> ThresholdResult:
    """Largest ``sigma`` for which the iteration converges, by bisection.

    The bracket is first found by doubling/halving from ``template.sigma``
    (or 1 when that is 0); bisection then runs in ``log sigma`` until the
    relative bracket width drops below ``rel_width``.
    """
    F, v = data_from_noise(xi, ell, mask)
    cfg = FixedPointConfig(template.sigma or 1.0, ell, template.tol, template.max_iter, template.eps,
                           template.growth_window, template.residual_factor)
    evals = 0

    def ok(s):
        nonlocal evals
        evals += 1
        return _converges(F, v, cfg.with_sigma(s))

    s = cfg.sigma
    if ok(s):
        lo = s
        hi = 2 * s
        while ok(hi):
            lo, hi = hi, 2 * hi
            if hi > 1e12:
                return ThresholdResult(lo, (lo, math.inf), True, evals)
    else:
        hi = s
        lo = s / 2
        while not ok(lo):
            hi, lo = lo, lo / 2
            if lo < sigma_floor:
                return ThresholdResult(0.0, (0.0, hi), True, evals)
    while hi / lo - 1.0 > rel_width:
        mid = math.sqrt(lo * hi)
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return ThresholdResult(lo, (lo, hi), False, evals)


@dataclass
class ContinuityReport:
    w_diff: float
    F_diff: float
    v_diff: float
    w_sup_diff: float
    reports: tuple[FixedPointReport, FixedPointReport]


def continuity_in_data(F: SpectralField, F2: SpectralField, v: SpectralField, v2: SpectralField,
                       cfg: FixedPointConfig, plan: PairPlan | None = None) -> ContinuityReport:
    """Compare the fixed points for two data pairs through Hoelder proxies."""
    reports = []
    for a, b in ((F, v), (F2, v2)):
        r = solve_fixed_point(a, b, cfg)
        if not r.converged:
            raise RippleError("fixed point did not converge for one of the data pairs")
        reports.append(r)
    plan = plan or PairPlan("exhaustive")
    dw = reports[0].w - reports[1].w
    dF = F - F2
    dv = v - v2

    def pos(f, a):
        return holder_pos(f, a, plan).value if np.any(f.coeffs) else 0.0

    def neg(f, b):
        return holder_neg_semigroup(f, b).value if np.any(f.coeffs) else 0.0

    return ContinuityReport(
        pos(dw, 1.25 - 2 * cfg.eps),
        neg(dF, -0.75 - cfg.eps),
        pos(dv, 0.75 - cfg.eps),
        dw.sup_norm(),
        (reports[0], reports[1]),
    )
