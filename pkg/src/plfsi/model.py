"""Estimation of the partially linear Frechet single-index model.

For a fixed unit-norm index direction theta the model is linear at every
probability-grid point t:

    Y_i(t) ~ alpha(t) + beta(t)' Z_i + gamma(t)' B(theta' X_i)

where B is a B-spline basis with percentile knots computed from the current
index values.  Coefficients are obtained by survey-weighted least squares,
fitted subject curves are projected onto nondecreasing vectors, and theta is
chosen to minimize the weighted integrated squared residual via multi-start
bound-constrained quasi-Newton over the angular parametrization of the sphere.

The global Frechet baseline treats all covariates linearly and needs no index
search.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .isotonic import project_monotone
from .quantiles import ProbabilityGrid, QuantileFunction
from .records import stack_records
from .splines import (
    SplineConfig,
    eval_basis_matrix,
    make_knots,
)
from .wls import SurveyGroups, WlsSolver

__all__ = [
    "IndexParam",
    "angles_to_theta",
    "FitConfig",
    "ModelFit",
    "profile_fit",
    "objective",
    "fit_plsi",
    "fit_global",
    "predict",
    "fitted_values",
    "OptimizationError",
]

FORMAT_VERSION = 1


class OptimizationError(RuntimeError):
    """No optimizer start converged; carries best-so-far diagnostics."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or []


@dataclass(frozen=True)
class IndexParam:
    """Unit-norm index direction with first nonzero component positive."""

    theta: np.ndarray

    def __post_init__(self):
        th = np.asarray(self.theta, dtype=float)
        th.flags.writeable = False
        object.__setattr__(self, "theta", th)
        if th.ndim != 1 or th.size < 1:
            raise ValueError("theta must be a nonempty vector")
        if abs(np.linalg.norm(th) - 1.0) > 1e-10:
            raise ValueError("theta must have unit Euclidean norm")
        nz = np.nonzero(th)[0]
        if nz.size == 0 or th[nz[0]] <= 0:
            raise ValueError("first nonzero component of theta must be positive")

    @property
    def p(self) -> int:
        return self.theta.size


def angles_to_theta(angles) -> IndexParam:
    """Spherical-coordinate map from p-1 angles in [-pi/2, pi/2] to the sphere.

    theta_1 is the product of all cosines (hence nonnegative); for p = 2 the
    map is eta -> (cos eta, sin eta).  The sign is flipped if needed so the
    first nonzero component is positive.
    """
    eta = np.atleast_1d(np.asarray(angles, dtype=float))
    if np.any(np.abs(eta) > np.pi / 2 + 1e-12):
        raise ValueError("angles must lie in [-pi/2, pi/2]")
    p = eta.size + 1
    cos = np.cos(eta)
    theta = np.empty(p)
    theta[0] = np.prod(cos)
    for k in range(1, p):
        theta[k] = np.sin(eta[p - 1 - k]) * np.prod(cos[: p - 1 - k])
    theta /= np.linalg.norm(theta)
    nz = np.nonzero(np.abs(theta) > 1e-14)[0]
    theta[np.abs(theta) <= 1e-14] = 0.0
    if theta[nz[0]] < 0:
        theta = -theta
    return IndexParam(theta)


@dataclass
class FitConfig:
    """Settings for model estimation."""

    spline_order: int = 4
    interior_knots: int = 5
    starts_per_dim: int = 4
    max_iter: int = 200
    tol: float = 1e-8
    fd_step: float = 1e-6
    compute_bands: bool = True
    level: float = 0.95

    def to_dict(self):
        return {
            "spline_order": self.spline_order,
            "interior_knots": self.interior_knots,
            "starts_per_dim": self.starts_per_dim,
            "max_iter": self.max_iter,
            "tol": self.tol,
            "fd_step": self.fd_step,
            "compute_bands": self.compute_bands,
            "level": self.level,
        }


@dataclass(frozen=True)
class ModelFit:
    """Fitted model: coefficient paths over the grid plus metadata."""

    model: str  # "plsi" or "global"
    grid: ProbabilityGrid
    coef: np.ndarray  # (d, m) design-coefficient paths
    coef_names: list
    x_names: list
    z_names: list
    objective: float
    n: int
    config: dict
    theta: np.ndarray | None = None
    spline: SplineConfig | None = None
    coef_se: np.ndarray | None = None

    def __post_init__(self):
        if self.coef.shape[1] != self.grid.m:
            raise ValueError("coefficient paths must match grid size")
        if self.objective < 0:
            raise ValueError("objective must be nonnegative")

    @property
    def p_z(self) -> int:
        return len(self.z_names)

    @property
    def p_x(self) -> int:
        return len(self.x_names)

    @property
    def alpha(self) -> np.ndarray:
        return self.coef[0]

    @property
    def beta(self) -> np.ndarray:
        return self.coef[1 : 1 + self.p_z]

    @property
    def gamma(self) -> np.ndarray:
        """Spline coefficient paths, (K+s, m); the first is pinned to zero."""
        if self.model != "plsi":
            raise ValueError("gamma only exists for the single-index model")
        zero = np.zeros((1, self.grid.m))
        return np.vstack([zero, self.coef[1 + self.p_z :]])

    @property
    def x_coef(self) -> np.ndarray:
        if self.model != "global":
            raise ValueError("x_coef only exists for the global model")
        return self.coef[1 + self.p_z :]

    @property
    def n_params(self) -> int:
        """Scalar parameter count at a single grid point (for adjusted R2)."""
        if self.model == "plsi":
            return 1 + self.p_z + self.spline.basis_dim
        return 1 + self.p_z + self.p_x

    # -- serialization -------------------------------------------------

    def to_dict(self):
        return {
            "format_version": FORMAT_VERSION,
            "model": self.model,
            "m": self.grid.m,
            "theta": None if self.theta is None else list(self.theta),
            "spline": None
            if self.spline is None
            else {
                "order": self.spline.order,
                "interior_knots": list(self.spline.interior_knots),
                "boundary": list(self.spline.boundary),
            },
            "coef": self.coef.tolist(),
            "coef_se": None if self.coef_se is None else self.coef_se.tolist(),
            "coef_names": list(self.coef_names),
            "x_names": list(self.x_names),
            "z_names": list(self.z_names),
            "objective": self.objective,
            "n": self.n,
            "config": self.config,
        }

    @classmethod
    def from_dict(cls, d):
        if d.get("format_version") != FORMAT_VERSION:
            raise ValueError(f"unsupported model-file format: {d.get('format_version')}")
        spline = None
        if d["spline"] is not None:
            spline = SplineConfig(
                order=d["spline"]["order"],
                interior_knots=np.array(d["spline"]["interior_knots"]),
                boundary=tuple(d["spline"]["boundary"]),
            )
        return cls(
            model=d["model"],
            grid=ProbabilityGrid.equidistant(d["m"]),
            coef=np.array(d["coef"]),
            coef_names=d["coef_names"],
            x_names=d["x_names"],
            z_names=d["z_names"],
            objective=d["objective"],
            n=d["n"],
            config=d["config"],
            theta=None if d["theta"] is None else np.array(d["theta"]),
            spline=spline,
            coef_se=None if d["coef_se"] is None else np.array(d["coef_se"]),
        )

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, sort_keys=True, indent=1)
            fh.write("\n")

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


# -- profiled estimation ----------------------------------------------


def _plsi_design(X, Z, theta, K, s, spline=None):
    """Design [1, Z, B(theta'X)[:, 1:]] with theta-dependent percentile knots.

    The first spline column is dropped: the basis sums to one pointwise, so
    keeping all K+s columns alongside the intercept would make the design
    singular.  The dropped coefficient is pinned to zero.
    """
    u = X @ theta
    if spline is None:
        spline = make_knots(u, K=K, s=s)
    U = eval_basis_matrix(u, spline)
    n = X.shape[0]
    design = np.hstack([np.ones((n, 1)), Z, U[:, 1:]])
    return design, spline


def _column_names(z_names, extra):
    return ["intercept"] + list(z_names) + list(extra)


@dataclass
class ProfileFit:
    """WLS fits at every grid point for a fixed index direction."""

    spline: SplineConfig
    design: np.ndarray
    solver: WlsSolver
    coef: np.ndarray  # (d, m)
    ystar: np.ndarray  # (n, m) raw fitted values
    yhat: np.ndarray  # (n, m) monotone-projected fitted values


def profile_fit(theta, records, spline_order=4, interior_knots=5) -> ProfileFit:
    """Fit all grid-point regressions for a fixed theta and project fits."""
    th = theta.theta if isinstance(theta, IndexParam) else np.asarray(theta, float)
    ids, Y, X, Z, w, strata, psus, grid = stack_records(records)
    return _profile_fit_stacked(th, Y, X, Z, w, spline_order, interior_knots)


def _profile_fit_stacked(th, Y, X, Z, w, spline_order, interior_knots, z_names=None):
    design, spline = _plsi_design(X, Z, th, interior_knots, spline_order)
    names = _column_names(
        z_names if z_names is not None else [f"z{j}" for j in range(Z.shape[1])],
        [f"spline_{j + 2}" for j in range(spline.basis_dim - 1)],
    )
    solver = WlsSolver(design, w, column_names=names)
    coef = solver.solve(Y)  # (d, m)
    ystar = design @ coef
    yhat = np.apply_along_axis(project_monotone, 1, ystar)
    return ProfileFit(spline, design, solver, coef, ystar, yhat)


def _objective_from_fit(Y, yhat, w, grid) -> float:
    tw = grid.trapezoid_weights()
    per_subject = ((Y - yhat) ** 2) @ tw
    return float(np.dot(w, per_subject))


def objective(theta, records, spline_order=4, interior_knots=5) -> float:
    """Weighted integrated squared residual W_n(theta)."""
    ids, Y, X, Z, w, strata, psus, grid = stack_records(records)
    th = theta.theta if isinstance(theta, IndexParam) else np.asarray(theta, float)
    pf = _profile_fit_stacked(th, Y, X, Z, w, spline_order, interior_knots)
    return _objective_from_fit(Y, pf.yhat, w, grid)


def _start_lattice(p_minus_1, starts_per_dim):
    """Midpoints of equal subintervals of [-pi/2, pi/2] in each dimension."""
    half = np.pi / 2
    step = np.pi / starts_per_dim
    axis = -half + step * (np.arange(starts_per_dim) + 0.5)
    return [np.array(c) for c in itertools.product(axis, repeat=p_minus_1)]


def _coef_se(pf, Y, w, strata, psus, grid):
    """Pointwise design-based standard errors of every design coefficient."""
    m = grid.m
    d = pf.design.shape[1]
    groups = SurveyGroups(strata, psus)
    bread = pf.solver.xtwx_inv()
    se = np.empty((d, m))
    for j in range(m):
        resid = Y[:, j] - pf.ystar[:, j]
        scores = pf.design * (w * resid)[:, None]
        cov = bread @ groups.between_psu_covariance(scores) @ bread
        se[:, j] = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    return se


def fit_plsi(records, config: FitConfig | None = None, x_names=None, z_names=None):
    """Full single-index fit: multi-start angular search then final profile fit.

    Returns (ModelFit, start_log); the log has one entry per optimizer start.
    """
    config = config or FitConfig()
    ids, Y, X, Z, w, strata, psus, grid = stack_records(records)
    n, p_x = X.shape
    p_z = Z.shape[1]
    if n <= p_z + config.interior_knots + config.spline_order + 1:
        raise ValueError("too few subjects for the requested spline dimension")
    x_names = list(x_names) if x_names else [f"x{j}" for j in range(p_x)]
    z_names = list(z_names) if z_names else [f"z{j}" for j in range(p_z)]

    def wn(angles):
        th = angles_to_theta(angles).theta
        pf = _profile_fit_stacked(
            th, Y, X, Z, w, config.spline_order, config.interior_knots, z_names
        )
        return _objective_from_fit(Y, pf.yhat, w, grid)

    start_log = []
    if p_x == 1:
        theta = IndexParam(np.array([1.0]))
        best_angles = np.empty(0)
    else:
        bounds = [(-np.pi / 2, np.pi / 2)] * (p_x - 1)
        candidates = []
        for start in _start_lattice(p_x - 1, config.starts_per_dim):
            res = minimize(
                wn,
                start,
                method="L-BFGS-B",
                bounds=bounds,
                jac="3-point",
                options={
                    "maxiter": config.max_iter,
                    "ftol": config.tol,
                    "finite_diff_rel_step": config.fd_step,
                },
            )
            entry = {
                "start_angles": list(start),
                "final_angles": list(np.atleast_1d(res.x)),
                "objective": float(res.fun),
                "converged": bool(res.success),
                "n_iter": int(res.nit),
                "message": str(res.message),
            }
            start_log.append(entry)
            candidates.append((float(res.fun), tuple(np.atleast_1d(res.x)), res))
        if not any(e["converged"] for e in start_log):
            raise OptimizationError(
                "no optimizer start converged", diagnostics=start_log
            )
        best_fun = min(c[0] for c in candidates)
        # ties within 1e-10 broken by lexicographically smallest angle vector
        tied = [c for c in candidates if c[0] <= best_fun + 1e-10]
        best = min(tied, key=lambda c: c[1])
        best_angles = np.array(best[1])
        theta = angles_to_theta(best_angles)

    pf = _profile_fit_stacked(
        theta.theta, Y, X, Z, w, config.spline_order, config.interior_knots, z_names
    )
    obj = _objective_from_fit(Y, pf.yhat, w, grid)
    se = _coef_se(pf, Y, w, strata, psus, grid) if config.compute_bands else None
    fit = ModelFit(
        model="plsi",
        grid=grid,
        coef=pf.coef,
        coef_names=pf.solver.names,
        x_names=x_names,
        z_names=z_names,
        objective=obj,
        n=n,
        config=config.to_dict(),
        theta=theta.theta,
        spline=pf.spline,
        coef_se=se,
    )
    return fit, start_log


def fit_global(records, config: FitConfig | None = None, x_names=None, z_names=None):
    """Global Frechet baseline: every covariate enters linearly."""
    config = config or FitConfig()
    ids, Y, X, Z, w, strata, psus, grid = stack_records(records)
    n, p_x = X.shape
    x_names = list(x_names) if x_names else [f"x{j}" for j in range(p_x)]
    z_names = list(z_names) if z_names else [f"z{j}" for j in range(Z.shape[1])]
    design = np.hstack([np.ones((n, 1)), Z, X])
    names = _column_names(z_names, x_names)
    solver = WlsSolver(design, w, column_names=names)
    coef = solver.solve(Y)
    ystar = design @ coef
    yhat = np.apply_along_axis(project_monotone, 1, ystar)
    obj = _objective_from_fit(Y, yhat, w, grid)
    if config.compute_bands:
        pf = ProfileFit(None, design, solver, coef, ystar, yhat)
        se = _coef_se(pf, Y, w, strata, psus, grid)
    else:
        se = None
    fit = ModelFit(
        model="global",
        grid=grid,
        coef=coef,
        coef_names=names,
        x_names=x_names,
        z_names=z_names,
        objective=obj,
        n=n,
        config=config.to_dict(),
        coef_se=se,
    )
    return fit, []


# -- prediction --------------------------------------------------------


def _design_rows(fit: ModelFit, Z, X):
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if Z.shape[1] != fit.p_z or X.shape[1] != fit.p_x:
        raise ValueError(
            f"expected z of length {fit.p_z} and x of length {fit.p_x}, "
            f"got {Z.shape[1]} and {X.shape[1]}"
        )
    n = X.shape[0]
    if fit.model == "plsi":
        u = X @ fit.theta
        U = eval_basis_matrix(u, fit.spline)  # clamps outside the boundary
        return np.hstack([np.ones((n, 1)), Z, U[:, 1:]])
    return np.hstack([np.ones((n, 1)), Z, X])


def predict_raw(fit: ModelFit, z, x) -> np.ndarray:
    """Pre-projection predicted curve(s); rows may be non-monotone."""
    rows = _design_rows(fit, z, x)
    return rows @ fit.coef


def predict(fit: ModelFit, z, x) -> QuantileFunction:
    """Predicted quantile function at covariates (z, x)."""
    ystar = predict_raw(fit, z, x)
    if ystar.shape[0] != 1:
        raise ValueError("predict takes a single covariate pair; see fitted_values")
    return QuantileFunction(fit.grid, project_monotone(ystar[0]))


def fitted_values(fit: ModelFit, records) -> np.ndarray:
    """Monotone-projected fitted curves for a list of records, (n, m)."""
    ids, Y, X, Z, w, strata, psus, grid = stack_records(records)
    if grid != fit.grid:
        raise ValueError("records and fit are on different grids")
    ystar = predict_raw(fit, Z, X)
    return np.apply_along_axis(project_monotone, 1, ystar)
