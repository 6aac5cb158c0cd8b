"""Log-log least-squares slope fits."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigurationError


@dataclass
class SlopeFit:
    """Least-squares line through ``(log x, log y)``."""

    slope: float
    intercept: float
    r2: float
    slope_stderr: float
    x_range: tuple[float, float]
    n_points: int
    point_stderr: list[float] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "r2": self.r2,
            "slope_stderr": self.slope_stderr,
            "x_range": list(self.x_range),
            "n_points": self.n_points,
            "point_stderr": list(self.point_stderr),
        }


def fit_slope(points, stderr=None) -> SlopeFit:
    """Fit ``log y = slope * log x + intercept``.

    Parameters
    ----------
    points : iterable of (x, y)
        At least four points with ``x > 0`` and ``y > 0``.
    stderr : optional sequence
        Standard errors of ``y``, carried into the result unchanged.
    """
    pts = np.asarray(list(points), dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 4 or pts.shape[1] != 2:
        raise ConfigurationError("slope fit needs at least 4 (x, y) points")
    x, y = pts[:, 0], pts[:, 1]
    if np.any(x <= 0) or np.any(y <= 0) or not np.all(np.isfinite(pts)):
        raise ConfigurationError("slope fit needs positive finite x and y")
    lx, ly = np.log(x), np.log(y)
    A = np.vstack([lx, np.ones_like(lx)]).T
    (slope, intercept), *_ = np.linalg.lstsq(A, ly, rcond=None)
    resid = ly - (slope * lx + intercept)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    ss_res = float(np.sum(resid**2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    sxx = float(np.sum((lx - lx.mean()) ** 2))
    dof = len(x) - 2
    se = float(np.sqrt(ss_res / dof / sxx)) if sxx > 0 else float("inf")
    return SlopeFit(float(slope), float(intercept), r2, se, (float(x.min()), float(x.max())), len(x),
                    [float(s) for s in stderr] if stderr is not None else [])
