"""Monte Carlo and sweep studies behind every acceptance check.

Each study returns a :class:`StudyResult` holding CSV rows, NDJSON
estimate rows, slope fits and named pass/fail checks.  Per-seed work can
fan out over threads; results are always merged in seed order and reduced
with ``math.fsum`` so the numbers do not depend on scheduling.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import ConfigurationError, NonContractionError
from ..fixed_point import FixedPointConfig, data_from_noise, sigma_threshold_search, solve_fixed_point
from ..grid import SpectralField, TorusGrid, make_grid, set_fft_workers
from ..noise import noise_moment_suite, power_law_field, sample_white_noise
from ..norms import (
    PairPlan,
    commutator_conv,
    corrected_commutator,
    dyadic_T_grid,
    hilbert_holder_check,
    holder_neg_semigroup,
    holder_pos,
    holder_pos_reference,
    resolved_T_window,
)
from ..operators import (
    dyadic_annulus_means,
    euler_lagrange_residual,
    linearized_energy_divergence,
    offline_product,
    solve_linear,
)
from ..snapshot import content_hash, write_snapshot
from ..symbols import GREEN, MASKS, PROJECTION, apply_multiplier, heat, mollifier, mollify
from .config import StudyConfig
from .fit import SlopeFit, fit_slope

CSV_COLUMNS = ("quantity", "parameter", "value", "stderr", "n_samples", "seed_range", "grid")


@dataclass
class Check:
    name: str
    value: float
    target: str
    passed: bool

    def to_dict(self) -> dict:
        return {"name": self.name, "value": self.value, "target": self.target, "passed": self.passed}


@dataclass
class StudyResult:
    kind: str
    config: StudyConfig
    rows: list = field(default_factory=list)
    estimates: list = field(default_factory=list)
    fits: dict = field(default_factory=dict)
    checks: list = field(default_factory=list)
    snapshots: dict = field(default_factory=dict)
    extras: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def check(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def row(self, quantity, parameter, value, stderr=0.0, n_samples=1, seeds=None, grid=None):
        seeds = seeds if seeds is not None else self.config.seeds
        grid = grid or (self.config.n1, self.config.n2)
        self.rows.append({
            "quantity": quantity,
            "parameter": float(parameter),
            "value": float(value),
            "stderr": float(stderr),
            "n_samples": int(n_samples),
            "seed_range": f"{seeds[0]}-{seeds[-1]}",
            "grid": f"{grid[0]}x{grid[1]}",
        })

    def add_check(self, name, value, target, passed):
        self.checks.append(Check(name, float(value), target, bool(passed)))

    def summary(self) -> dict:
        return {
            "kind": self.kind,
            "passed": self.passed,
            "checks": [c.to_dict() for c in self.checks],
            "fits": {k: v.to_dict() for k, v in self.fits.items()},
            "snapshots": self.snapshots,
            "extras": self.extras,
        }

    def write(self, out_dir) -> Path:
        """Write ``results.csv``, ``estimates.ndjson`` and ``summary.json``."""
        out = Path(out_dir)
        try:
            out.mkdir(parents=True, exist_ok=True)
            with open(out / "results.csv", "w", newline="") as fh:
                fh.write(",".join(CSV_COLUMNS) + "\n")
                for r in self.rows:
                    fh.write(",".join(_fmt(r[c]) for c in CSV_COLUMNS) + "\n")
            with open(out / "estimates.ndjson", "w") as fh:
                for e in self.estimates:
                    fh.write(json.dumps(e, sort_keys=True) + "\n")
            with open(out / "summary.json", "w") as fh:
                json.dump(self.summary(), fh, sort_keys=True, indent=2)
        except OSError as exc:
            raise ConfigurationError(f"cannot write study output to {out}: {exc}") from exc
        return out


def _fmt(v) -> str:
    return repr(v) if isinstance(v, float) else str(v)


# -- helpers ------------------------------------------------------------------

def _map(fn, items, threads: int):
    items = list(items)
    if threads <= 1 or len(items) < 2:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, items))


def _mean_se(samples) -> tuple[float, float]:
    s = [float(x) for x in samples]
    n = len(s)
    mean = math.fsum(s) / n
    if n < 2:
        return mean, 0.0
    var = math.fsum((x - mean) ** 2 for x in s) / (n - 1)
    return mean, math.sqrt(var / n)


def _column_mean_se(table: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    pairs = [_mean_se(table[:, j]) for j in range(table.shape[1])]
    return np.array([p[0] for p in pairs]), np.array([p[1] for p in pairs])


def finest_ell(grid: TorusGrid) -> float:
    """Dyadic mollification scale matching the x1 grid spacing."""
    return 2.0 ** -math.ceil(math.log2(grid.n1))


def _ms_over_T(c: np.ndarray, grid: TorusGrid, Ts) -> np.ndarray:
    """Spatial mean square of ``psi_T * f`` for each ``T`` (Parseval)."""
    p = np.abs(c) ** 2
    return np.array([math.fsum((p * heat(T).on(grid) ** 2).ravel()) for T in Ts])


def _rms_fit(res: StudyResult, name: str, Ts, table: np.ndarray) -> SlopeFit:
    ms, ms_se = _column_mean_se(table)
    rms = np.sqrt(ms)
    se = ms_se / (2.0 * rms)
    for T, r, s in zip(Ts, rms, se):
        res.row(name, T, r, s, table.shape[0])
    fit = fit_slope(zip(Ts, rms), se)
    res.fits[name] = fit
    return fit


# -- studies ------------------------------------------------------------------

def _noise_regularity(cfg: StudyConfig) -> StudyResult:
    res = StudyResult(cfg.kind, cfg)
    grid = make_grid(cfg.n1, cfg.n2)
    ell = cfg.ell[0] if cfg.ell else finest_ell(grid)
    Ts = cfg.T or resolved_T_window(grid)
    phi = mollifier(ell).on(grid)

    def per_seed(s):
        xi = sample_white_noise(grid, s).projected()
        return _ms_over_T(phi * xi.coeffs, grid, Ts)

    table = np.array(_map(per_seed, cfg.seeds, cfg.threads))
    fit = _rms_fit(res, "rms_xi_ell_T", Ts, table)
    target, tol = cfg.tolerance("slope_target"), cfg.tolerance("slope_tol")
    res.add_check("xi_slope", fit.slope, f"{target:.4f} +- {tol}", abs(fit.slope - target) <= tol)
    res.extras.update({"ell": ell, "T_window": list(Ts)})

    h1, h2 = grid.n1 // 2, grid.n2 // 2
    modes = [(1, 0), (0, 1), (1, 1), (-3, 2), (5, -7), (h1 - 1, 1), (2, h2 - 1)]
    k, l, m = (1, 2), (3, -1), (2, 5)
    neg = lambda a: (-a[0], -a[1])  # noqa: E731
    tuples = [(a, neg(a)) for a in modes]
    cross = [(k, l), (k, k), ((1, 0), (0, 1)), (m, neg(l))]
    tuples += cross
    tuples += [(k, k, neg(k), neg(k)), (k, neg(k), l, neg(l)), (k, l, m, (-6, -6)), (k, k, l, l)]
    mseeds = range(cfg.seed_start, cfg.seed_start + cfg.moment_seeds)
    rep = noise_moment_suite(grid, mseeds, tuples, cfg.tolerance("moment_se"))
    worst = 0.0
    for r in rep.rows:
        label = "moment_" + "_".join(f"{a}:{b}" for a, b in r.modes)
        res.row(label, len(r.modes), r.mean.real, r.stderr[0], rep.n_samples, mseeds)
        if len(r.modes) == 2 and r.modes not in cross:
            worst = max(worst, abs(r.mean.real - 1.0))
    cross_z = max(max(abs(r.mean.real) / r.stderr[0], abs(r.mean.imag) / r.stderr[1])
                  for r in rep.rows if r.modes in cross)
    res.add_check("cross_moments", cross_z, "<= 3 SE", cross_z <= 3.0)
    vt = cfg.tolerance("variance_tol")
    res.add_check("mode_variance", worst, f"max |<|xi(k)|^2> - 1| <= {vt}", worst <= vt)
    res.add_check("moment_structure", len(rep.flagged), f"0 tuples beyond {rep.threshold_se} SE",
                  not rep.flagged)

    xi0 = sample_white_noise(grid, cfg.seed_start)
    res.extras["snapshot_field"] = mollify(xi0.projected(), ell)
    return res


def _offline_product(cfg: StudyConfig) -> StudyResult:
    res = StudyResult(cfg.kind, cfg)
    grid = make_grid(cfg.n1, cfg.n2)
    ell = cfg.ell[0] if cfg.ell else finest_ell(grid)
    Ts = cfg.T or resolved_T_window(grid)
    T_mid = Ts[len(Ts) // 2]
    d = grid.d0

    def per_seed(s):
        xi = sample_white_noise(grid, s)
        F = offline_product(mollify(solve_linear(xi), ell))
        ms = _ms_over_T(F.coeffs, grid, Ts)
        x = apply_multiplier(F, heat(T_mid)).physical().ravel()
        moments = [math.fsum(np.abs(x) ** p) / x.size for p in (2, 4, 8)]
        return ms, np.abs(F.coeffs) ** 2, moments

    out = _map(per_seed, cfg.seeds, cfg.threads)
    table = np.array([o[0] for o in out])
    fit = _rms_fit(res, "rms_F_ell_T", Ts, table)
    target, tol = cfg.tolerance("slope_target"), cfg.tolerance("slope_tol")
    res.add_check("F_slope", fit.slope, f"{target:.4f} +- {tol}", abs(fit.slope - target) <= tol)

    power = np.zeros(grid.shape)
    for o in out:
        power += o[1]
    power /= len(out)
    ann = dyadic_annulus_means(grid, power * d)
    for lo, mean, count in ann:
        res.row("annulus_F2_d", lo, mean, 0.0, len(out))
    vals = [a[1] for a in ann]
    ratio = max(vals) / min(vals)
    lim = cfg.tolerance("annulus_ratio")
    res.add_check("annulus_ratio", ratio, f"< {lim}", ratio < lim)

    mom = np.array([o[2] for o in out])
    roots = []
    for j, p in enumerate((2, 4, 8)):
        m, se = _mean_se(mom[:, j])
        root = m ** (1.0 / p)
        roots.append(root)
        res.row("nelson_moment_root", p, root, se * root / (p * m), len(out))
    # second-chaos hypercontractivity: ||X||_p <= (p - 1) ||X||_2
    growth = roots[2] / roots[0]
    res.add_check("nelson_hypercontractive", growth, "m8^(1/8)/m2^(1/2) <= 7", growth <= 7.0)
    res.extras.update({"ell": ell, "T_window": list(Ts), "T_moments": T_mid})
    res.extras["snapshot_field"] = offline_product(mollify(solve_linear(sample_white_noise(grid, cfg.seed_start)), ell))
    return res


def _cauchy_rate(cfg: StudyConfig) -> StudyResult:
    res = StudyResult(cfg.kind, cfg)
    grid = make_grid(cfg.n1, cfg.n2)
    ells = sorted(cfg.ell, reverse=True)
    Tg = cfg.T or dyadic_T_grid(grid)
    eps = cfg.eps

    def per_seed(s):
        xi = sample_white_noise(grid, s).projected()
        v = solve_linear(xi)
        Fs = [offline_product(mollify(v, l)) for l in ells]
        xs = [holder_neg_semigroup(mollify(xi, l) - xi, -1.25 - eps, Tg).value for l in ells]
        pair = {}
        for i in range(len(ells)):
            for j in range(i + 1, len(ells)):
                pair[(i, j)] = holder_neg_semigroup(Fs[i] - Fs[j], -0.75 - eps, Tg).value
        # sup over scales below each l0
        xi_sup = [max(xs[i:]) for i in range(len(ells))]
        F_sup = [max([pair[(a, b)] for a in range(i, len(ells)) for b in range(a + 1, len(ells))], default=0.0)
                 for i in range(len(ells))]
        return xi_sup, F_sup

    out = _map(per_seed, cfg.seeds, cfg.threads)
    margin = cfg.tolerance("slope_margin")
    floor = eps / 2 - margin
    for name, idx, usable in (("cauchy_xi", 0, len(ells)), ("cauchy_F", 1, len(ells) - 1)):
        table = np.array([o[idx] for o in out])[:, :usable]
        mean, se = _column_mean_se(table)
        for l, m, s in zip(ells[:usable], mean, se):
            res.row(name, l, m, s, table.shape[0])
        fit = fit_slope(zip(ells[:usable], mean), se)
        res.fits[name] = fit
        mono = bool(np.all(np.diff(mean) <= 0))
        res.add_check(f"{name}_monotone", float(mono), "nonincreasing as l0 decreases", mono)
        res.add_check(f"{name}_slope", fit.slope, f">= {floor:.3f}", fit.slope >= floor)
    return res


def _fixed_point_sweep(cfg: StudyConfig) -> StudyResult:
    res = StudyResult(cfg.kind, cfg)
    grid = make_grid(cfg.n1, cfg.n2)
    ell = cfg.ell[0] if cfg.ell else 1.0 / 16
    seed = cfg.seed_start
    xi = sample_white_noise(grid, seed)
    F, v = data_from_noise(xi, ell)
    base = FixedPointConfig(1.0, ell, cfg.tol, cfg.max_iter, cfg.eps)
    if cfg.sigma:
        sigmas = [float(s) for s in cfg.sigma]
        sigma0 = None
    else:
        th = sigma_threshold_search(xi, ell, base, rel_width=cfg.threshold_rel_width)
        sigma0 = th.sigma0
        res.extras["sigma0_bracket"] = list(th.bracket)
        top = sigma0 * 10.0 ** -cfg.sigma_decades_below
        sigmas = list(np.geomspace(top / 10.0, top, cfg.n_sigma))
    res.extras["sigma0"] = sigma0

    def per_sigma(s):
        try:
            r = solve_fixed_point(F, v, base.with_sigma(s))
        except NonContractionError as exc:
            return s, None, exc.history
        el = euler_lagrange_residual(r.u, xi, s, ell)
        proxy = holder_pos(r.w, 1.25 - 2 * cfg.eps, PairPlan("exhaustive")).value
        return s, r, (el, proxy)

    out = _map(per_sigma, sigmas, cfg.threads)
    conv, rates, resid, proxies = [], [], [], []
    for s, r, info in out:
        if r is None:
            conv.append(False)
            continue
        el, proxy = info
        conv.append(r.converged)
        rate = max(r.contraction_estimates[1:], default=0.0)
        rates.append(rate)
        resid.append(el)
        proxies.append(proxy)
        res.row("w_holder_proxy", s, proxy, 0.0, 1, [seed])
        res.row("el_residual", s, el, 0.0, 1, [seed])
        res.row("max_contraction", s, rate, 0.0, 1, [seed])
        res.row("iterations", s, r.iterations, 0.0, 1, [seed])
        res.estimates.append({"variant": "direct-positive", "exponent": 1.25 - 2 * cfg.eps, "value": proxy,
                              "field_id": f"w_seed{seed}_sigma{s:.6g}", "metadata": {"plan": "exhaustive"}})
    res.add_check("converged", sum(conv), f"all {len(sigmas)} solves converge", all(conv))
    if all(conv):
        limit = cfg.tolerance("residual_factor") * cfg.tol
        res.add_check("contraction", max(rates), "< 1", max(rates) < 1.0)
        res.add_check("el_residual", max(resid), f"<= {limit:g}", max(resid) <= limit)
        fit = fit_slope(zip(sigmas, proxies))
        res.fits["w_proxy_vs_sigma"] = fit
        target, tol = cfg.tolerance("slope_target"), cfg.tolerance("slope_tol")
        res.add_check("sigma_slope", fit.slope, f"{target} +- {tol}", abs(fit.slope - target) <= tol)
        last = out[-1][1]
        res.extras["snapshot_w"] = last.w
        res.extras["snapshot_u"] = last.u
    res.extras["sigmas"] = [float(s) for s in sigmas]
    return res


def _mollifier_independence(cfg: StudyConfig) -> StudyResult:
    res = StudyResult(cfg.kind, cfg)
    grid = make_grid(cfg.n1, cfg.n2)
    ells = sorted(cfg.ell, reverse=True)
    sigma = float(cfg.sigma[0]) if cfg.sigma else 1.0
    masks = [MASKS[m] for m in cfg.masks]
    if len(masks) != 2:
        raise ConfigurationError("mollifier independence compares exactly two masks")
    xi = sample_white_noise(grid, cfg.seed_start)
    alpha = 0.75 - cfg.eps
    plan = PairPlan("exhaustive")

    def per_ell(l):
        us = []
        for m in masks:
            F, v = data_from_noise(xi, l, m)
            r = solve_fixed_point(F, v, FixedPointConfig(sigma, l, cfg.tol, cfg.max_iter, cfg.eps))
            if not r.converged:
                raise ConfigurationError(f"fixed point did not converge at ell={l}, mask={m.name}")
            us.append(r.u)
        diff = us[0] - us[1]
        rel = holder_pos(diff, alpha, plan).value / holder_pos(us[0], alpha, plan).value
        rel_sup = diff.sup_norm() / us[0].sup_norm()
        return rel, rel_sup

    out = _map(per_ell, ells, cfg.threads)
    rel = [o[0] for o in out]
    for l, (r, rs) in zip(ells, out):
        res.row("u_mask_diff_holder_rel", l, r, 0.0, 1, [cfg.seed_start])
        res.row("u_mask_diff_sup_rel", l, rs, 0.0, 1, [cfg.seed_start])
    dec = all(b < a for a, b in zip(rel, rel[1:]))
    res.add_check("decreasing", float(dec), "relative difference decreasing as ell decreases", dec)
    lim = cfg.tolerance("relative_diff")
    res.add_check("final_relative_diff", rel[-1], f"< {lim:g}", rel[-1] < lim)
    res.extras.update({"sigma": sigma, "exponent": alpha})
    return res


def _energy_divergence(cfg: StudyConfig) -> StudyResult:
    res = StudyResult(cfg.kind, cfg)
    rep = linearized_energy_divergence(cfg.cutoffs, cfg.seeds)
    for K, a, m, s, n in zip(rep.cutoffs, rep.analytic, rep.mc_mean, rep.mc_stderr, rep.n_modes):
        res.row("analytic_partial_sum", K, a, 0.0, 1)
        res.row("mc_linearized_energy", K, m, s, rep.n_samples)
        res.row("n_modes", K, n, 0.0, 1)
    r2min = cfg.tolerance("r2_min")
    res.add_check("log_fit_r2", rep.log_r2, f"> {r2min}", rep.log_r2 > r2min)
    zmax = max(rep.mc_z)
    lim = cfg.tolerance("mc_se")
    res.add_check("mc_agreement", zmax, f"<= {lim} SE at every K", zmax <= lim)
    res.extras.update({
        "log_slope": rep.log_slope, "log_intercept": rep.log_intercept,
        "power_exponent": rep.power_exponent, "power_r2": rep.power_r2,
    })
    return res


def _norm_battery(cfg: StudyConfig) -> StudyResult:
    res = StudyResult(cfg.kind, cfg)
    eps = cfg.eps

    # exact agreement of the pruned exhaustive estimator with a direct double loop
    small = make_grid(16, 16)
    mismatches = 0
    for i in range(3):
        f = power_law_field(small, 0.5, cfg.seed_start + i)
        for a in (0.4, 1.0, 1.3):
            fast = holder_pos(f, a, PairPlan("exhaustive")).value
            mismatches += fast != holder_pos_reference(f, a)
    res.add_check("holder_exact", mismatches, "0 mismatches on 16x16", mismatches == 0)

    # Schauder ratio over a battery of band-limited fields
    bat = make_grid(64, 64)
    spread_lim = cfg.tolerance("schauder_spread")
    for alpha in (0.75 - eps, 1.25 - eps):
        ratios = []
        for i in range(cfg.n_fields):
            e = (alpha - 2) + (-0.2, -0.1, 0.0, 0.1, 0.2)[i % 5]
            cut = (12.0, 24.0, 48.0, None)[(i // 5) % 4]
            f = apply_multiplier(power_law_field(bat, e, cfg.seed_start + 500 + i, cut), PROJECTION)
            num = holder_pos(apply_multiplier(f, GREEN), alpha, PairPlan("exhaustive")).value
            den = holder_neg_semigroup(f, alpha - 2).value
            ratios.append(num / den)
            res.row(f"schauder_ratio_{alpha:.2f}", i, num / den, 0.0, 1, grid=bat.shape)
        spread = max(ratios) / min(ratios)
        res.add_check(f"schauder_spread_{alpha:.2f}", spread, f"< {spread_lim}", spread < spread_lim)

    # Hilbert transform loss on the same battery
    fields_ = [apply_multiplier(power_law_field(bat, 0.7, cfg.seed_start + 700 + i, 24.0), PROJECTION)
               for i in range(cfg.n_fields)]
    hb = hilbert_holder_check(fields_, 0.7, 0.05, cfg.tolerance("hilbert_bound"), PairPlan("exhaustive"))
    for i, r in enumerate(hb.ratios):
        res.row("hilbert_ratio", i, r, 0.0, 1, grid=bat.shape)
    res.add_check("hilbert_ratio", hb.max_ratio, f"<= {hb.bound}", not hb.flagged)

    # commutator scaling in ell
    grid = make_grid(cfg.n1, cfg.n2)
    ells = sorted(cfg.ell, reverse=True)
    tol = cfg.tolerance("commutator_slope_tol")
    for alpha in cfg.alphas:
        op = commutator_conv if alpha <= 1.0 else corrected_commutator

        def per_seed(s, alpha=alpha, op=op):
            u = power_law_field(grid, alpha, 10_000 + s)
            f = power_law_field(grid, cfg.beta, 20_000 + s)
            cs = [op(u, f, l) for l in ells]
            return [c.sup_norm() for c in cs], [math.sqrt(math.fsum((np.abs(c.coeffs) ** 2).ravel())) for c in cs]

        out = _map(per_seed, cfg.seeds, cfg.threads)
        sup_mean, sup_se = _column_mean_se(np.array([o[0] for o in out]))
        rms = np.sqrt(_column_mean_se(np.array([o[1] for o in out]) ** 2)[0])
        for l, m, s, r in zip(ells, sup_mean, sup_se, rms):
            res.row(f"commutator_sup_{alpha}", l, m, s, len(out))
            res.row(f"commutator_rms_{alpha}", l, r, 0.0, len(out))
        fit = fit_slope(zip(ells, sup_mean), sup_se)
        res.fits[f"commutator_sup_{alpha}"] = fit
        res.fits[f"commutator_rms_{alpha}"] = fit_slope(zip(ells, rms))
        target = alpha + cfg.beta
        res.add_check(f"commutator_slope_{alpha}", fit.slope, f"{target:.2f} +- {tol}",
                      abs(fit.slope - target) <= tol)
    return res


_STUDIES = {
    "noise-regularity": _noise_regularity,
    "offline-product": _offline_product,
    "cauchy-rate": _cauchy_rate,
    "fixed-point-sweep": _fixed_point_sweep,
    "mollifier-independence": _mollifier_independence,
    "energy-divergence": _energy_divergence,
    "norm-battery": _norm_battery,
}


def run_study(cfg: StudyConfig, write: bool = True) -> StudyResult:
    """Run the study named by ``cfg.kind`` and optionally persist its outputs."""
    cfg.validate()
    if cfg.kind not in _STUDIES:
        raise ConfigurationError(f"unknown study kind {cfg.kind!r}")
    set_fft_workers(1 if cfg.strict_reduction else cfg.threads)
    threads = 1 if cfg.strict_reduction else cfg.threads
    res = _STUDIES[cfg.kind](cfg.with_(threads=threads))
    res.config = cfg
    snaps = {k: res.extras.pop(k) for k in list(res.extras) if k.startswith("snapshot_")}
    if write:
        out = res.write(Path(cfg.out) / cfg.kind)
        for key, f in snaps.items():
            if isinstance(f, SpectralField):
                name = f"{key[len('snapshot_'):]}-{content_hash(f)[:16]}.ripl"
                res.snapshots[name] = write_snapshot(out / name, f)
        res.write(out)
    return res
