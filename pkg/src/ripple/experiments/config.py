"""Study configuration: TOML ingestion with a versioned, closed schema."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import tomli

from ..errors import ConfigurationError

SCHEMA_VERSION = 1

KINDS = (
    "noise-regularity",
    "offline-product",
    "cauchy-rate",
    "fixed-point-sweep",
    "mollifier-independence",
    "energy-divergence",
    "norm-battery",
)

# tolerance names understood by each study, with defaults
TOLERANCES = {
    "noise-regularity": {"slope_target": -5.0 / 12.0, "slope_tol": 0.08, "variance_tol": 0.05, "moment_se": 4.0},
    "offline-product": {"slope_target": -0.25, "slope_tol": 0.06, "annulus_ratio": 20.0},
    "cauchy-rate": {"slope_margin": 0.05},
    "fixed-point-sweep": {"slope_target": 2.0, "slope_tol": 0.1, "residual_factor": 10.0},
    "mollifier-independence": {"relative_diff": 1e-2},
    "energy-divergence": {"r2_min": 0.99, "mc_se": 3.0},
    "norm-battery": {"commutator_slope_tol": 0.1, "schauder_spread": 50.0, "hilbert_bound": 10.0},
}

_DEFAULTS = {
    "noise-regularity": dict(n1=256, n2=256, seed_count=200, ell=None, moment_seeds=10_000),
    "offline-product": dict(n1=256, n2=256, seed_count=200, ell=None),
    "cauchy-rate": dict(n1=256, n2=256, seed_count=10, ell=[2.0**-m for m in range(2, 9)], eps=0.1),
    "fixed-point-sweep": dict(n1=128, n2=128, seed_count=1, ell=[1.0 / 16], eps=0.05),
    "mollifier-independence": dict(n1=128, n2=128, seed_count=1, ell=[1.0 / 8, 1.0 / 16, 1.0 / 32],
                                   sigma=[1.0], eps=0.05),
    "energy-divergence": dict(n1=16, n2=16, seed_count=200, cutoffs=[8.0, 16.0, 32.0, 64.0, 128.0]),
    "norm-battery": dict(n1=128, n2=2048, seed_count=8, ell=[2.0**-m for m in range(3, 8)], eps=0.05),
}


@dataclass
class StudyConfig:
    """All parameters of one study run.

    Grid-valued parameters (``ell``, ``T``, ``sigma``) left as ``None`` are
    chosen by the study from the grid; see :mod:`ripple.experiments.studies`.
    """

    kind: str
    n1: int = 256
    n2: int = 256
    seed_start: int = 0
    seed_count: int = 200
    ell: list | None = None
    T: list | None = None
    sigma: list | None = None
    eps: float = 0.1
    masks: list = field(default_factory=lambda: ["gaussian", "quartic"])
    alphas: list = field(default_factory=lambda: [0.7, 1.2])
    beta: float = -0.8
    cutoffs: list = field(default_factory=lambda: [8.0, 16.0, 32.0, 64.0, 128.0])
    n_fields: int = 20
    moment_seeds: int = 10_000
    tol: float = 1e-10
    max_iter: int = 500
    n_sigma: int = 6
    threshold_rel_width: float = 0.02
    sigma_decades_below: int = 1
    tolerances: dict = field(default_factory=dict)
    out: str = "out"
    threads: int = 1
    strict_reduction: bool = False

    @classmethod
    def for_kind(cls, kind: str, **overrides) -> "StudyConfig":
        if kind not in KINDS:
            raise ConfigurationError(f"unknown study kind {kind!r}")
        params = dict(_DEFAULTS[kind])
        params.update(overrides)
        cfg = cls(kind=kind, **params)
        cfg.validate()
        return cfg

    @property
    def seeds(self) -> range:
        return range(self.seed_start, self.seed_start + self.seed_count)

    def tolerance(self, name: str) -> float:
        return float(self.tolerances.get(name, TOLERANCES[self.kind][name]))

    def with_(self, **changes) -> "StudyConfig":
        cfg = replace(self, **changes)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if self.kind not in KINDS:
            raise ConfigurationError(f"unknown study kind {self.kind!r}")
        if self.seed_count < 1:
            raise ConfigurationError("seed range must be nonempty")
        for name in ("ell", "T"):
            vals = getattr(self, name)
            if vals is None:
                continue
            for v in vals:
                if not 0 < v <= 1 or abs(math.log2(v) - round(math.log2(v))) > 1e-12:
                    raise ConfigurationError(f"{name} values must be dyadic in (0, 1], got {v}")
        if self.kind in ("noise-regularity", "offline-product", "cauchy-rate", "norm-battery",
                         "fixed-point-sweep", "mollifier-independence"):
            if not 0 < self.eps < 0.25:
                raise ConfigurationError("eps must lie in (0, 1/4)")
        if self.kind == "cauchy-rate" and (self.ell is None or len(self.ell) < 5):
            raise ConfigurationError("cauchy-rate needs at least 5 dyadic ell values")
        unknown = set(self.tolerances) - set(TOLERANCES[self.kind])
        if unknown:
            raise ConfigurationError(f"unknown tolerances for {self.kind}: {sorted(unknown)}")
        if self.threads < 1:
            raise ConfigurationError("threads must be >= 1")
        for n in (self.n1, self.n2):
            if n < 4 or n % 2:
                raise ConfigurationError("grid dimensions must be even and >= 4")


# TOML layout: section -> {toml key: config attribute}
_SECTIONS = {
    "study": {"kind": "kind", "schema_version": None},
    "grid": {"n1": "n1", "n2": "n2"},
    "seeds": {"start": "seed_start", "count": "seed_count"},
    "parameters": {
        "ell": "ell", "T": "T", "sigma": "sigma", "eps": "eps", "masks": "masks", "alphas": "alphas",
        "beta": "beta", "cutoffs": "cutoffs", "n_fields": "n_fields", "moment_seeds": "moment_seeds",
        "tol": "tol", "max_iter": "max_iter", "n_sigma": "n_sigma",
        "threshold_rel_width": "threshold_rel_width", "sigma_decades_below": "sigma_decades_below",
    },
    "tolerances": None,
    "output": {"dir": "out"},
    "execution": {"threads": "threads", "strict_reduction": "strict_reduction"},
}


def parse_config(data: dict) -> StudyConfig:
    """Build a :class:`StudyConfig` from parsed TOML, rejecting unknown keys."""
    unknown = set(data) - set(_SECTIONS)
    if unknown:
        raise ConfigurationError(f"unknown config sections: {sorted(unknown)}")
    study = data.get("study")
    if not isinstance(study, dict) or "kind" not in study:
        raise ConfigurationError("config needs [study] with a kind")
    version = study.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ConfigurationError(f"unsupported schema_version {version!r}; expected {SCHEMA_VERSION}")
    overrides = {}
    for section, mapping in _SECTIONS.items():
        table = data.get(section)
        if table is None:
            continue
        if not isinstance(table, dict):
            raise ConfigurationError(f"[{section}] must be a table")
        if mapping is None:
            overrides["tolerances"] = {k: float(v) for k, v in table.items()}
            continue
        bad = set(table) - set(mapping)
        if bad:
            raise ConfigurationError(f"unknown keys in [{section}]: {sorted(bad)}")
        for key, attr in mapping.items():
            if attr and key in table and attr != "kind":
                overrides[attr] = table[key]
    known = {f.name for f in fields(StudyConfig)}
    assert set(overrides) <= known
    return StudyConfig.for_kind(study["kind"], **overrides)


def load_config(path) -> StudyConfig:
    try:
        with open(Path(path), "rb") as fh:
            data = tomli.load(fh)
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    except tomli.TOMLDecodeError as exc:
        raise ConfigurationError(f"invalid TOML in {path}: {exc}") from exc
    return parse_config(data)
