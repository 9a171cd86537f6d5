"""Survey-weighted least squares with design-based (linearization) variance.

The same design matrix is shared across all probability-grid points, so the
orthogonal factorization of the sqrt(w)-scaled design is computed once and
reused for every response vector.
"""

from __future__ import annotations

import numpy as np
from scipy import linalg

__all__ = ["WlsSolver", "SurveyGroups", "fit_wls", "design_variance"]


class RankDeficientError(ValueError):
    """Design matrix is not of full column rank."""


def _check_weights(weights, n):
    w = np.asarray(weights, dtype=float)
    if w.shape != (n,):
        raise ValueError("weights must be one per row")
    if np.any(w <= 0) or not np.all(np.isfinite(w)):
        raise ValueError("weights must be positive and finite")
    return w


class WlsSolver:
    """Factors a weighted design once; solves for any number of responses."""

    def __init__(self, design, weights, column_names=None):
        X = np.asarray(design, dtype=float)
        if X.ndim != 2:
            raise ValueError("design must be 2-d")
        n, d = X.shape
        if n < d:
            raise ValueError(f"need at least as many rows ({n}) as columns ({d})")
        w = _check_weights(weights, n)
        self.design = X
        self.weights = w
        self.names = (
            list(column_names) if column_names is not None else [f"x{j}" for j in range(d)]
        )
        sw = np.sqrt(w)
        A = X * sw[:, None]
        Q, R, piv = linalg.qr(A, mode="economic", pivoting=True)
        diag = np.abs(np.diag(R))
        tol = max(n, d) * np.finfo(float).eps * (diag[0] if diag.size else 0.0)
        rank = int(np.sum(diag > tol))
        if rank < d:
            bad = sorted(self.names[j] for j in piv[rank:])
            raise RankDeficientError(
                f"design matrix is rank deficient; collinear columns: {bad}"
            )
        self._sw = sw
        self._Q, self._R, self._piv = Q, R, piv

    def solve(self, response) -> np.ndarray:
        """WLS coefficients; response may be a vector or an (n, m) matrix."""
        y = np.asarray(response, dtype=float)
        vec = y.ndim == 1
        if vec:
            y = y[:, None]
        if y.shape[0] != self.design.shape[0]:
            raise ValueError("response length must match design rows")
        rhs = self._Q.T @ (y * self._sw[:, None])
        beta_piv = linalg.solve_triangular(self._R, rhs)
        beta = np.empty_like(beta_piv)
        beta[self._piv] = beta_piv
        return beta[:, 0] if vec else beta

    def xtwx_inv(self) -> np.ndarray:
        """(X^T W X)^{-1}, the bread of the sandwich variance."""
        Rinv = linalg.solve_triangular(self._R, np.eye(self._R.shape[0]))
        M = Rinv @ Rinv.T
        out = np.empty_like(M)
        out[np.ix_(self._piv, self._piv)] = M
        return out


class SurveyGroups:
    """Precomputed (stratum, PSU) grouping for linearization variances.

    Identifiers are compared as strings, so relabeling strata or PSUs leaves
    every computed covariance unchanged.
    """

    def __init__(self, strata, psus):
        strata = np.asarray(strata).astype(str)
        psus = np.asarray(psus).astype(str)
        if strata.shape != psus.shape or strata.ndim != 1:
            raise ValueError("strata and psus must be 1-d and equal length")
        pair_keys = np.char.add(np.char.add(strata, "\x1f"), psus)
        uniq, self.pair_codes = np.unique(pair_keys, return_inverse=True)
        pair_strata = np.array([k.split("\x1f", 1)[0] for k in uniq])
        self.n_pairs = uniq.size
        # contiguous slices of PSU-total rows per stratum
        order = np.argsort(pair_strata, kind="stable")
        self.psu_order = order
        sorted_strata = pair_strata[order]
        boundaries = np.flatnonzero(
            np.r_[True, sorted_strata[1:] != sorted_strata[:-1], True]
        )
        self.slices = list(zip(boundaries[:-1], boundaries[1:]))
        for lo, hi in self.slices:
            if hi - lo < 2:
                raise ValueError(
                    f"stratum {sorted_strata[lo]!r} has a single PSU; collapse "
                    "strata before computing design-based variances"
                )

    def between_psu_covariance(self, scores) -> np.ndarray:
        """With-replacement between-PSU covariance of score totals."""
        d = scores.shape[1]
        totals = np.zeros((self.n_pairs, d))
        np.add.at(totals, self.pair_codes, scores)
        totals = totals[self.psu_order]
        meat = np.zeros((d, d))
        for lo, hi in self.slices:
            T = totals[lo:hi]
            n_h = hi - lo
            dev = T - T.mean(axis=0)
            meat += (n_h / (n_h - 1)) * dev.T @ dev
        return meat


def fit_wls(design, response, weights) -> np.ndarray:
    """Minimize sum_i w_i (y_i - x_i^T b)^2 via a stable QR of the scaled system."""
    return WlsSolver(design, weights).solve(response)


def design_variance(design, response, weights, strata, psus, coefficients) -> np.ndarray:
    """Taylor-linearization (sandwich) covariance of WLS coefficients.

    The meat is the with-replacement between-PSU covariance of the weighted
    score totals within strata, with the usual n_h/(n_h - 1) factor.  Every
    stratum needs at least two PSUs.
    """
    X = np.asarray(design, dtype=float)
    y = np.asarray(response, dtype=float)
    n, d = X.shape
    w = _check_weights(weights, n)
    b = np.asarray(coefficients, dtype=float)
    strata = np.asarray(strata)
    psus = np.asarray(psus)
    if strata.shape != (n,) or psus.shape != (n,):
        raise ValueError("strata and psus must be one per row")

    resid = y - X @ b
    scores = X * (w * resid)[:, None]  # n x d
    groups = SurveyGroups(strata, psus)
    meat = groups.between_psu_covariance(scores)
    sw = np.sqrt(w)
    bread = np.linalg.pinv((X * sw[:, None]).T @ (X * sw[:, None]))
    cov = bread @ meat @ bread
    return 0.5 * (cov + cov.T)
