"""Model interpretation: index derivatives, prediction surfaces, unit conversion."""

from __future__ import annotations

import numpy as np

from .model import ModelFit, predict_raw
from .isotonic import project_monotone
from .splines import eval_basis_derivative_matrix

__all__ = ["index_derivative", "prediction_grid", "mims_to_clinical"]

DEFAULT_T_LIST = (0.50, 0.75, 0.90, 0.97)


def _grid_index(fit: ModelFit, t: float) -> int:
    j = int(round(t * (fit.grid.m - 1)))
    if not (0 <= j < fit.grid.m) or abs(fit.grid.points[j] - t) > 1e-9:
        raise ValueError(f"t={t} is not a grid point (m={fit.grid.m})")
    return j


def index_derivative(fit: ModelFit, u: float, t: float):
    """Derivative of the pre-projection prediction with respect to the index.

    Returns (value, extrapolated).  The derivative applies to the raw spline
    surface, before monotone projection.  ``extrapolated`` is True outside the
    interior-knot window, where spline boundary effects make the derivative
    unreliable; evaluation points beyond the boundary knots are clamped.
    """
    if fit.model != "plsi":
        raise ValueError("index derivatives require a single-index fit")
    j = _grid_index(fit, t)
    dphi = eval_basis_derivative_matrix([u], fit.spline)[0]
    value = float(fit.gamma[:, j] @ dphi)
    ik = fit.spline.interior_knots
    extrapolated = bool(u < ik[0] or u > ik[-1])
    return value, extrapolated


def prediction_grid(fit: ModelFit, x1_range, x2_range, z_fixed, t_list=DEFAULT_T_LIST):
    """Heatmap-ready predictions over a 2-d grid of index covariates.

    ``x1_range``/``x2_range`` are (lo, hi, steps) triples.  Every cell gets one
    row per t in ``t_list`` plus the trapezoidal integral of the full predicted
    quantile function.  Index covariates beyond the training range are clamped
    by the spline boundary rule.
    """
    if fit.p_x != 2:
        raise ValueError("prediction_grid needs a fit with two index covariates")
    z_fixed = np.asarray(z_fixed, dtype=float)
    if z_fixed.shape != (fit.p_z,):
        raise ValueError(f"z_fixed must have length {fit.p_z}")
    t_idx = [_grid_index(fit, t) for t in t_list]
    x1 = np.linspace(*x1_range[:2], int(x1_range[2]))
    x2 = np.linspace(*x2_range[:2], int(x2_range[2]))
    rows = []
    for a in x1:
        for b in x2:
            ystar = predict_raw(fit, z_fixed, np.array([a, b]))[0]
            yhat = project_monotone(ystar)
            integral = float(np.trapezoid(yhat, fit.grid.points))
            for t, j in zip(t_list, t_idx):
                rows.append(
                    {
                        "x1": float(a),
                        "x2": float(b),
                        "t": float(t),
                        "yhat": float(yhat[j]),
                        "integral": integral,
                    }
                )
    return rows


def mims_to_clinical(delta_daily_mims: float, steps_per_unit: float = 1000.0,
                     mortality_pct_per_unit: float = 4.0):
    """Convert a change in daily MIMS (integral of the quantile function) to
    approximate steps/day and annual mortality change, for inactive people.

    The default constants are literature-derived extrapolations (one daily
    MIMS unit ~ 1000 steps/day ~ 4% annual mortality) and are configurable.
    """
    d = float(delta_daily_mims)
    if not np.isfinite(d):
        raise ValueError("input must be finite")
    return d * steps_per_unit, d * mortality_pct_per_unit
