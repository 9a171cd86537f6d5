"""L2 projection onto the cone of nondecreasing vectors (valid quantile values).

Solved exactly by the pool-adjacent-violators algorithm in O(n).
"""

from __future__ import annotations

import numpy as np

__all__ = ["project_monotone"]


def project_monotone(values, weights=None) -> np.ndarray:
    """Weighted isotonic regression of ``values``.

    Returns the nondecreasing vector minimizing sum_i w_i (out_i - values_i)^2.
    Ties are allowed in the output (flat stretches are valid quantile values).
    """
    v = np.asarray(values, dtype=float)
    if v.ndim != 1:
        raise ValueError("values must be a 1-d vector")
    if not np.all(np.isfinite(v)):
        raise ValueError("values must be finite")
    n = v.size
    if weights is None:
        w = np.ones(n)
    else:
        w = np.asarray(weights, dtype=float)
        if w.shape != v.shape or np.any(w <= 0) or not np.all(np.isfinite(w)):
            raise ValueError("weights must be positive, finite, same length as values")

    # block stacks: weighted mean, total weight, block length
    means = np.empty(n)
    wsum = np.empty(n)
    size = np.empty(n, dtype=int)
    top = -1
    for i in range(n):
        top += 1
        means[top] = v[i]
        wsum[top] = w[i]
        size[top] = 1
        while top > 0 and means[top - 1] > means[top]:
            tw = wsum[top - 1] + wsum[top]
            means[top - 1] = (
                wsum[top - 1] * means[top - 1] + wsum[top] * means[top]
            ) / tw
            wsum[top - 1] = tw
            size[top - 1] += size[top]
            top -= 1
    return np.repeat(means[: top + 1], size[: top + 1])
