"""Least-squares convergence fits, requirement extrapolation and campaign curves.

Fits are done in base-10 logarithms:

* ``loglinear_in_D``:  ``log10(err) = chi * D + lambda``
* ``loglog_in_calls``: ``log10(err) = chi * log10(calls) + lambda``
* ``linear``:          ``y = chi * x + lambda`` (e.g. required ``D`` against ``N``)
"""
from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass

import numpy as np

from .resources import CostOptions, campaign_cost

__all__ = [
    "FitModel",
    "SweepPoint",
    "fit",
    "extrapolate_requirement",
    "best_median_curve",
    "campaign_curves",
    "exponential_law",
    "SATURATION_FLOOR",
]

FIT_KINDS = ("loglinear_in_D", "loglog_in_calls", "linear")
SATURATION_FLOOR = 1e-13  # 10x the GEVP machine floor used by the solvers
_FAILED = 1e300


@dataclass(frozen=True)
class SweepPoint:
    """One observation. ``control`` is ``D`` or a call budget; ``D`` records the Krylov size when ``control`` is a budget."""

    N: int
    control: float
    frac_error: float
    quartiles: tuple | None = None
    D: int | None = None
    status: str = "ok"


@dataclass(frozen=True)
class FitModel:
    kind: str
    chi: float
    lam: float
    chi_se: float
    lam_se: float
    n_points: int
    cov: float = float("nan")
    r2: float = float("nan")

    @property
    def chi_ln(self) -> float:
        """Slope converted to natural-log units."""
        return self.chi * math.log(10) if self.kind != "linear" else self.chi

    def predict(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "loglinear_in_D":
            return 10 ** (self.chi * x + self.lam)
        if self.kind == "loglog_in_calls":
            return 10 ** (self.chi * np.log10(x) + self.lam)
        return self.chi * x + self.lam


def _coords(points, kind):
    if kind not in FIT_KINDS:
        raise ValueError(f"kind must be one of {FIT_KINDS}")
    pts = list(points)
    if kind == "loglinear_in_D":
        pts = [p for p in pts if p.status == "ok" and p.frac_error > SATURATION_FLOOR]
    if kind != "linear":
        pts = [p for p in pts if np.isfinite(p.frac_error) and p.frac_error > 0]
    x = np.array([p.control for p in pts], dtype=float)
    y = np.array([p.frac_error for p in pts], dtype=float)
    if kind == "loglog_in_calls":
        if np.any(x <= 0):
            raise ValueError("call budgets must be positive for a log-log fit")
        x = np.log10(x)
    if kind != "linear":
        y = np.log10(y)
    return x, y


def fit(points, kind: str) -> FitModel:
    """Ordinary least squares with slope/intercept standard errors and their covariance.

    With exactly two points the line is exact and the errors are ``nan``.
    """
    x, y = _coords(points, kind)
    n = len(x)
    if n < 2:
        raise ValueError(f"need at least 2 usable points, have {n}")
    if np.ptp(x) == 0:
        raise ValueError("degenerate abscissae: all control values equal")
    A = np.column_stack([x, np.ones(n)])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(resid @ resid) / ss_tot if ss_tot > 0 else 1.0
    if n > 2:
        s2 = float(resid @ resid) / (n - 2)
        cov = s2 * np.linalg.inv(A.T @ A)
        chi_se, lam_se, c = math.sqrt(cov[0, 0]), math.sqrt(cov[1, 1]), float(cov[0, 1])
    else:
        chi_se = lam_se = c = float("nan")
    return FitModel(kind, float(coef[0]), float(coef[1]), chi_se, lam_se, n, c, r2)


def extrapolate_requirement(model: FitModel, target_error: float) -> dict:
    """Control value at which the fitted law reaches ``target_error``.

    Returns ``{"value", "se"}``; ``se`` is first-order propagation through
    the full (chi, lambda) covariance.
    """
    if model.chi >= 0:
        raise ValueError("fitted slope is non-negative: the error never reaches the target")
    ly = target_error if model.kind == "linear" else math.log10(target_error)
    root = (ly - model.lam) / model.chi
    # d root / d chi = -root / chi, d root / d lam = -1 / chi
    g = np.array([-root / model.chi, -1.0 / model.chi])
    cov = np.array([[model.chi_se**2, model.cov], [model.cov, model.lam_se**2]])
    var = float(g @ cov @ g)
    se = math.sqrt(var) if np.isfinite(var) and var >= 0 else float("nan")
    if model.kind == "loglog_in_calls":
        value = 10**root
        return {"value": value, "se": value * math.log(10) * se, "log10_value": root, "log10_se": se}
    return {"value": root, "se": se}


def best_median_curve(points) -> list[SweepPoint]:
    """Per ``(N, budget)``, the Krylov size whose median error over seeds is lowest.

    Failed runs enter the median as ``inf``. Ties go to the smaller ``D``.
    """
    groups: dict = defaultdict(lambda: defaultdict(list))
    for p in points:
        err = p.frac_error if np.isfinite(p.frac_error) else np.inf
        groups[(p.N, p.control)][p.D].append(err)
    out = []
    for (N, budget) in sorted(groups, key=lambda k: (k[0], k[1])):
        best = None
        for D in sorted(groups[(N, budget)], key=lambda d: (d is None, d)):
            # failures sort last; a stand-in keeps the interpolation finite
            errs = np.minimum(np.asarray(groups[(N, budget)][D]), _FAILED)
            q = tuple(float(v) if v < _FAILED else np.inf for v in np.percentile(errs, [25, 50, 75]))
            if best is None or q[1] < best[1][1]:
                best = (D, q)
        out.append(SweepPoint(N, budget, best[1][1], best[1], best[0]))
    return out


def exponential_law(N, log10_prefactor: float, base: float):
    """``10**log10_prefactor * base**N``, e.g. a calls-versus-size law."""
    return 10**log10_prefactor * np.power(base, N, dtype=float)


def campaign_curves(call_fits: dict, targets=(1e-2, 1e-4, 1e-6),
                    options: CostOptions = CostOptions()) -> list[dict]:
    """Total T gates per ``N`` and target error from per-``N`` log-log call fits."""
    rows = []
    for N in sorted(call_fits):
        model = call_fits[N]
        for target in targets:
            req = extrapolate_requirement(model, target)
            cost = campaign_cost(N, req["value"], options)
            rows.append({
                "N": N,
                "target": target,
                "calls": req["value"],
                "calls_se": req["se"],
                "t_gates": cost.t_gates,
                "t_with_rotations": cost.t_with_rotations,
            })
    return rows
