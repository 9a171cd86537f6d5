"""Quantile-function representations and their Wasserstein geometry.

Distributions on the real line are represented by their quantile functions
evaluated on a shared equidistant probability grid.  Under the 2-Wasserstein
metric the distance between two distributions is the L2[0,1] distance between
their quantile functions, and Frechet means are pointwise (weighted) means.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "ProbabilityGrid",
    "QuantileFunction",
    "RawActivitySeries",
    "empirical_quantile",
    "wasserstein_distance",
    "weighted_frechet_mean",
    "write_quantile_csv",
    "read_quantile_csv",
]


def _as_readonly(a, dtype=float):
    out = np.asarray(a, dtype=dtype)
    out = np.array(out, copy=True)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class ProbabilityGrid:
    """Equidistant probability grid on [0, 1], endpoints included."""

    points: np.ndarray

    def __post_init__(self):
        pts = _as_readonly(self.points)
        object.__setattr__(self, "points", pts)
        if pts.ndim != 1 or pts.size < 2:
            raise ValueError("grid needs at least two points")
        if pts[0] != 0.0 or pts[-1] != 1.0:
            raise ValueError("grid must start at 0 and end at 1")
        steps = np.diff(pts)
        if np.any(steps <= 0):
            raise ValueError("grid points must be strictly increasing")
        step = 1.0 / (pts.size - 1)
        if np.max(np.abs(steps - step)) > 1e-12:
            raise ValueError("grid must be equidistant")

    @classmethod
    def equidistant(cls, m: int = 101) -> "ProbabilityGrid":
        if m < 2:
            raise ValueError("m must be at least 2")
        return cls(np.linspace(0.0, 1.0, m))

    @property
    def m(self) -> int:
        return self.points.size

    @property
    def step(self) -> float:
        return 1.0 / (self.m - 1)

    def trapezoid_weights(self) -> np.ndarray:
        """Quadrature weights of the trapezoidal rule on this grid."""
        w = np.full(self.m, self.step)
        w[0] *= 0.5
        w[-1] *= 0.5
        return w

    def __eq__(self, other):
        return isinstance(other, ProbabilityGrid) and np.array_equal(
            self.points, other.points
        )

    def __hash__(self):
        return hash((self.m,))


@dataclass(frozen=True)
class QuantileFunction:
    """Nondecreasing function values on a probability grid."""

    grid: ProbabilityGrid
    values: np.ndarray

    def __post_init__(self):
        vals = _as_readonly(self.values)
        object.__setattr__(self, "values", vals)
        if vals.shape != (self.grid.m,):
            raise ValueError("values length must match grid size")
        if not np.all(np.isfinite(vals)):
            raise ValueError("values must be finite")
        if np.any(np.diff(vals) < 0):
            raise ValueError("values must be nondecreasing")

    def evaluate(self, t):
        """Linear interpolation of the quantile function at probabilities t."""
        return np.interp(t, self.grid.points, self.values)

    def integral(self) -> float:
        """Trapezoidal integral over [0, 1] (TAC-style scalar summary)."""
        return float(np.trapezoid(self.values, self.grid.points))


@dataclass(frozen=True)
class RawActivitySeries:
    """Irregular time-stamped nonnegative activity measurements for one subject."""

    subject_id: str
    times: np.ndarray
    measurements: np.ndarray

    def __post_init__(self):
        t = _as_readonly(self.times)
        a = _as_readonly(self.measurements)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "measurements", a)
        if t.shape != a.shape or t.ndim != 1:
            raise ValueError("times and measurements must be 1-d and equal length")
        if np.any(np.diff(t) < 0):
            raise ValueError("times must be nondecreasing")
        if np.any(a < 0):
            raise ValueError("measurements must be nonnegative")

    @property
    def n(self) -> int:
        return self.times.size


def empirical_quantile(samples, grid: ProbabilityGrid) -> QuantileFunction:
    """Left-continuous generalized inverse of the empirical CDF on the grid.

    The value at probability t is inf{a : Fhat(a) >= t}, i.e. the type-1
    empirical quantile; the value at t = 0 is the sample minimum.
    """
    x = np.asarray(samples, dtype=float)
    if x.size == 0:
        raise ValueError("empty sample")
    if not np.all(np.isfinite(x)):
        raise ValueError("samples must be finite")
    x = np.sort(x)
    n = x.size
    # nudge guards against n*t landing a hair above an integer in floating point
    idx = np.ceil(grid.points * n - 1e-9).astype(int) - 1
    idx = np.clip(idx, 0, n - 1)
    return QuantileFunction(grid, x[idx])


def _check_same_grid(q1: QuantileFunction, q2: QuantileFunction):
    if q1.grid != q2.grid:
        raise ValueError("quantile functions are on different grids")


def wasserstein_distance(q1: QuantileFunction, q2: QuantileFunction) -> float:
    """2-Wasserstein distance via the L2[0,1] distance of quantile functions.

    The integral is approximated by the trapezoidal rule on the shared grid.
    """
    _check_same_grid(q1, q2)
    diff2 = (q1.values - q2.values) ** 2
    return float(np.sqrt(np.trapezoid(diff2, q1.grid.points)))


def weighted_frechet_mean(qs, weights=None) -> QuantileFunction:
    """Weighted Wasserstein-Frechet mean: the pointwise weighted average."""
    qs = list(qs)
    if not qs:
        raise ValueError("empty list of quantile functions")
    grid = qs[0].grid
    for q in qs[1:]:
        _check_same_grid(qs[0], q)
    if weights is None:
        w = np.ones(len(qs))
    else:
        w = np.asarray(weights, dtype=float)
    if w.shape != (len(qs),) or np.any(w <= 0):
        raise ValueError("weights must be positive, one per function")
    vals = np.vstack([q.values for q in qs])
    mean = w @ vals / w.sum()
    return QuantileFunction(grid, mean)


def write_quantile_csv(path, subject_ids, qfs):
    """One CSV row per subject: subject_id, q_0, ..., q_{m-1}.

    The grid is declared in a leading comment line.
    """
    qfs = list(qfs)
    subject_ids = list(subject_ids)
    if len(subject_ids) != len(qfs):
        raise ValueError("subject_ids and quantile functions differ in length")
    m = qfs[0].grid.m if qfs else 0
    with open(path, "w") as fh:
        fh.write(f"# grid: equidistant, m={m}\n")
        fh.write("subject_id," + ",".join(f"q_{j}" for j in range(m)) + "\n")
        for sid, q in zip(subject_ids, qfs):
            row = ",".join(repr(float(v)) for v in q.values)
            fh.write(f"{sid},{row}\n")


def read_quantile_csv(path):
    """Inverse of :func:`write_quantile_csv`; returns (subject_ids, qfs, grid)."""
    with open(path) as fh:
        header = fh.readline().strip()
        if not header.startswith("# grid: equidistant, m="):
            raise ValueError(f"{path}: missing grid declaration header")
        m = int(header.split("m=")[1])
        grid = ProbabilityGrid.equidistant(m)
        fh.readline()  # column header
        ids, qfs = [], []
        for line in fh:
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            ids.append(parts[0])
            vals = np.array([float(v) for v in parts[1:]])
            qfs.append(QuantileFunction(grid, vals))
    return ids, qfs, grid
