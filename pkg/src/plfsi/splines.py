"""B-spline basis construction, evaluation and differentiation for the link.

A basis of order s (degree s-1) with K interior knots has K + s functions.
Boundary knots sit at the min/max of the index values and interior knots at
equally spaced percentiles, so the basis adapts to the current index direction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import BSpline

__all__ = ["SplineConfig", "make_knots", "eval_basis", "eval_basis_derivative"]


@dataclass(frozen=True)
class SplineConfig:
    order: int
    interior_knots: np.ndarray
    boundary: tuple[float, float]

    def __post_init__(self):
        ik = np.array(self.interior_knots, dtype=float)
        ik.flags.writeable = False
        object.__setattr__(self, "interior_knots", ik)
        lo, hi = self.boundary
        if self.order < 2:
            raise ValueError("spline order must be >= 2")
        if ik.size < 1:
            raise ValueError("need at least one interior knot")
        if np.any(np.diff(ik) < 0):
            raise ValueError("interior knots must be nondecreasing")
        if not (lo < ik[0] and ik[-1] < hi):
            raise ValueError("interior knots must lie strictly inside the boundary")

    @property
    def K(self) -> int:
        return self.interior_knots.size

    @property
    def basis_dim(self) -> int:
        return self.K + self.order

    @property
    def knot_vector(self) -> np.ndarray:
        """Full knot vector with boundary knots repeated ``order`` times."""
        lo, hi = self.boundary
        return np.concatenate(
            [np.full(self.order, lo), self.interior_knots, np.full(self.order, hi)]
        )

    def clamp(self, u):
        """Clamp index values to the boundary-knot interval."""
        lo, hi = self.boundary
        return np.clip(u, lo, hi)


def make_knots(index_values, K: int = 5, s: int = 4) -> SplineConfig:
    """Knot placement from observed index values.

    Boundary knots at the min/max; K interior knots at the empirical
    percentiles 100*j/(K+1), j = 1..K (linear interpolation of order
    statistics on the full multiset).
    """
    u = np.asarray(index_values, dtype=float)
    if not np.all(np.isfinite(u)):
        raise ValueError("index values must be finite")
    if np.unique(u).size < K + 2:
        raise ValueError(
            f"need at least {K + 2} distinct index values for {K} interior knots"
        )
    probs = np.arange(1, K + 1) / (K + 1)
    interior = np.quantile(u, probs)
    lo, hi = float(u.min()), float(u.max())
    if interior[0] <= lo or interior[-1] >= hi:
        raise ValueError("degenerate index values: percentile knots hit the boundary")
    return SplineConfig(order=s, interior_knots=interior, boundary=(lo, hi))


def eval_basis_matrix(u, config: SplineConfig) -> np.ndarray:
    """All basis functions at each of the given points; shape (len(u), K+s).

    Points outside the boundary knots are clamped to the boundary first.
    """
    u = np.atleast_1d(np.asarray(u, dtype=float))
    if not np.all(np.isfinite(u)):
        raise ValueError("basis evaluation points must be finite")
    uc = config.clamp(u)
    M = BSpline.design_matrix(uc, config.knot_vector, config.order - 1)
    return M.toarray()


def eval_basis(u: float, config: SplineConfig) -> np.ndarray:
    """Basis vector at a single point (nonnegative, sums to 1)."""
    return eval_basis_matrix([u], config)[0]


def eval_basis_derivative_matrix(u, config: SplineConfig) -> np.ndarray:
    """First derivatives of all basis functions at each point."""
    u = np.atleast_1d(np.asarray(u, dtype=float))
    if not np.all(np.isfinite(u)):
        raise ValueError("basis evaluation points must be finite")
    uc = config.clamp(u)
    t = config.knot_vector
    k = config.order - 1
    out = np.empty((uc.size, config.basis_dim))
    eye = np.eye(config.basis_dim)
    for j in range(config.basis_dim):
        # extrapolate=True so evaluation exactly at the right boundary knot
        # uses the interior polynomial piece
        db = BSpline(t, eye[j], k, extrapolate=True).derivative()
        out[:, j] = db(uc)
    return out


def eval_basis_derivative(u: float, config: SplineConfig) -> np.ndarray:
    return eval_basis_derivative_matrix([u], config)[0]
