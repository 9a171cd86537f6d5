"""Energy-distance k-groups clustering of functional quantile residuals.

Subjects whose observed activity distribution sits above or below the model
prediction form residual curves; clustering those curves yields activity
phenotypes.  The criterion is the total within-cluster energy dispersion

    W = sum_c (n_c / 2) * mean pairwise distance within cluster c,

minimized by first-variation single-point moves from a random partition.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import ModelFit, fitted_values
from .records import stack_records

__all__ = [
    "ResidualFunction",
    "residuals",
    "pairwise_l2",
    "kgroups",
    "elbow_curve",
    "KGroupsResult",
]


@dataclass(frozen=True)
class ResidualFunction:
    subject_id: str
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if not np.all(np.isfinite(v)):
            raise ValueError("residual values must be finite")
        object.__setattr__(self, "values", v)


def residuals(fit: ModelFit, records):
    """Pointwise quantile residuals Y_i(t) - Yhat_i(t) on the grid."""
    ids, Y, X, Z, w, strata, psus, grid = stack_records(records)
    yhat = fitted_values(fit, records)
    return [ResidualFunction(i, Y[k] - yhat[k]) for k, i in enumerate(ids)]


def pairwise_l2(residual_functions, grid=None) -> np.ndarray:
    """Symmetric matrix of trapezoidal L2[0,1] distances between curves."""
    R = np.vstack([r.values for r in residual_functions])
    n, m = R.shape
    if grid is None:
        tw = np.full(m, 1.0 / (m - 1))
        tw[0] *= 0.5
        tw[-1] *= 0.5
    else:
        tw = grid.trapezoid_weights()
    M = R * np.sqrt(tw)
    sq = (M**2).sum(axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * M @ M.T
    np.fill_diagonal(d2, 0.0)
    return np.sqrt(np.clip(d2, 0.0, None))


@dataclass
class KGroupsResult:
    labels: np.ndarray
    dispersion: float
    gini: float  # pooled mean within-cluster pairwise distance
    descent: list  # dispersion after each accepted sweep


def _dispersion(D, labels, k):
    W = 0.0
    for c in range(k):
        idx = np.where(labels == c)[0]
        if idx.size > 1:
            W += D[np.ix_(idx, idx)].sum() / (2.0 * idx.size)
    return W


def _gini(D, labels, k):
    num = 0.0
    den = 0
    for c in range(k):
        idx = np.where(labels == c)[0]
        if idx.size > 1:
            num += D[np.ix_(idx, idx)].sum()
            den += idx.size * (idx.size - 1)
    return num / den if den else 0.0


def _canonical_labels(labels, k):
    """Relabel clusters by size (desc) then by first member index."""
    order = sorted(
        range(k),
        key=lambda c: (-(labels == c).sum(), int(np.argmax(labels == c)) if (labels == c).any() else len(labels)),
    )
    mapping = {old: new for new, old in enumerate(order)}
    return np.array([mapping[c] for c in labels])


def _kgroups_once(D, k, rng):
    n = D.shape[0]
    labels = rng.integers(0, k, size=n)
    labels[rng.permutation(n)[:k]] = np.arange(k)  # every cluster non-empty
    sizes = np.bincount(labels, minlength=k)
    # S[c] = sum of distances from each point to the members of cluster c
    S = np.vstack([D[:, labels == c].sum(axis=1) for c in range(k)]).T  # n x k
    pair_sums = np.array([D[np.ix_(labels == c, labels == c)].sum() for c in range(k)])
    W = float(np.sum(pair_sums / np.maximum(2 * sizes, 1)))
    descent = [W]

    improved = True
    sweeps = 0
    while improved and sweeps < 200:
        improved = False
        sweeps += 1
        for i in range(n):
            a = labels[i]
            if sizes[a] <= 1:
                continue
            # change in W from removing i from a (S[i, a] counts i's ordered pairs once)
            gain_remove = (pair_sums[a] - 2 * S[i, a]) / (2 * (sizes[a] - 1)) - pair_sums[a] / (2 * sizes[a])
            best_b, best_delta = -1, -1e-12
            for b in range(k):
                if b == a:
                    continue
                gain_add = (pair_sums[b] + 2 * S[i, b]) / (2 * (sizes[b] + 1)) - pair_sums[b] / (2 * sizes[b])
                delta = gain_remove + gain_add
                if delta < best_delta:
                    best_delta, best_b = delta, b
            if best_b >= 0:
                pair_sums[a] -= 2 * S[i, a]
                pair_sums[best_b] += 2 * S[i, best_b]
                sizes[a] -= 1
                sizes[best_b] += 1
                S[:, a] -= D[:, i]
                S[:, best_b] += D[:, i]
                labels[i] = best_b
                W += best_delta
                improved = True
        descent.append(W)
    W = _dispersion(D, labels, k)  # recompute to shed accumulated rounding
    return labels, W, descent


def kgroups(D, k, seed=0, restarts=10) -> KGroupsResult:
    """First-variation k-groups on a precomputed distance matrix."""
    D = np.asarray(D, dtype=float)
    n = D.shape[0]
    if D.shape != (n, n):
        raise ValueError("distance matrix must be square")
    if not 1 <= k <= n:
        raise ValueError(f"k must be in 1..{n}, got {k}")
    if k == n:
        labels = np.arange(n)
        return KGroupsResult(labels, 0.0, 0.0, [0.0])
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(restarts):
        labels, W, descent = _kgroups_once(D, k, rng)
        if best is None or W < best.dispersion - 1e-12:
            best = KGroupsResult(
                _canonical_labels(labels, k), W, _gini(D, labels, k), descent
            )
    return best


def elbow_curve(D, k_max, seed=0, restarts=10):
    """Dispersion and Gini mean difference for k = 1..k_max, plus a suggestion.

    The suggested k maximizes the discrete curvature of the dispersion curve.
    The suggestion is flagged confident when the curve flattens sharply right
    after it: the drop entering the suggested k must be at least 5% of the
    total drop and more than 3 times the drop leaving it.
    """
    D = np.asarray(D, dtype=float)
    n = D.shape[0]
    if k_max > n:
        raise ValueError("k_max cannot exceed the number of subjects")
    rows = []
    for k in range(1, k_max + 1):
        res = kgroups(D, k, seed=seed, restarts=restarts)
        rows.append({"k": k, "dispersion": res.dispersion, "gini": res.gini})
    disp = np.array([r["dispersion"] for r in rows])
    suggestion, confident = None, False
    if k_max >= 3:
        total_drop = max(disp[0] - disp[-1], 1e-300)
        curvature = disp[:-2] - 2 * disp[1:-1] + disp[2:]  # at k = 2..k_max-1
        j = int(np.argmax(curvature))
        suggestion = j + 2
        drop_in = disp[j] - disp[j + 1]
        drop_out = disp[j + 1] - disp[j + 2]
        ratio = drop_in / max(drop_out, 1e-12 * total_drop)
        confident = bool(drop_in >= 0.05 * total_drop and ratio > 3.0)
    return {"curve": rows, "suggested_k": suggestion, "confident": confident}
