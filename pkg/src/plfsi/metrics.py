"""Goodness-of-fit metrics and pointwise confidence bands."""

from __future__ import annotations

import numpy as np
from scipy.stats import norm

from .model import ModelFit
from .quantiles import weighted_frechet_mean
from .records import stack_records

__all__ = ["frechet_r2", "adjusted_r2", "confidence_bands"]

DEFAULT_REPORTING_MAX_T = 0.97


def frechet_r2(records, fitted, weights=None) -> float:
    """Survey-weighted Frechet R2.

    1 - sum_i w_i int (Y_i - Yhat_i)^2 / sum_i w_i int (Y_i - Ybar)^2, where
    Ybar is the weighted Frechet mean of the observed responses and integrals
    use the trapezoidal rule.
    """
    ids, Y, X, Z, w, strata, psus, grid = stack_records(records)
    if weights is not None:
        w = np.asarray(weights, dtype=float)
    fitted = np.asarray(fitted, dtype=float)
    if fitted.shape != Y.shape:
        raise ValueError("fitted values must be one curve per record")
    tw = grid.trapezoid_weights()
    ybar = weighted_frechet_mean(
        [r.response for r in records], w
    ).values
    ss_res = float(np.dot(w, ((Y - fitted) ** 2) @ tw))
    ss_tot = float(np.dot(w, ((Y - ybar) ** 2) @ tw))
    if ss_tot == 0.0:
        raise ValueError("degenerate response: all responses are identical")
    return 1.0 - ss_res / ss_tot


def adjusted_r2(r2: float, n: int, q: int) -> float:
    """Complexity-penalized R2: r2 - (1 - r2) * q / (n - q - 1)."""
    if n <= q + 1:
        raise ValueError(f"need n > q + 1 (got n={n}, q={q})")
    return r2 - (1.0 - r2) * q / (n - q - 1)


def confidence_bands(fit: ModelFit, level: float = 0.95,
                     reporting_max_t: float = DEFAULT_REPORTING_MAX_T):
    """Pointwise normal confidence bands for every design coefficient.

    Returns a list of dict rows (coef, t, est, lo, hi) restricted to
    t in [0, reporting_max_t]; the far right tail is excluded by default
    because quantile estimates there are noisy.
    """
    if fit.coef_se is None:
        raise ValueError("fit was computed without design-based standard errors")
    if not 0 < level < 1:
        raise ValueError("level must be in (0, 1)")
    zmult = float(norm.ppf(0.5 + level / 2))
    keep = fit.grid.points <= reporting_max_t + 1e-12
    rows = []
    for i, name in enumerate(fit.coef_names):
        for t, est, se in zip(
            fit.grid.points[keep], fit.coef[i, keep], fit.coef_se[i, keep]
        ):
            half = zmult * se
            rows.append(
                {"coef": name, "t": float(t), "est": float(est),
                 "lo": float(est - half), "hi": float(est + half)}
            )
    return rows
