"""Partially linear Frechet single-index regression for distributional responses."""

from .quantiles import (
    ProbabilityGrid,
    QuantileFunction,
    RawActivitySeries,
    empirical_quantile,
    wasserstein_distance,
    weighted_frechet_mean,
)
from .isotonic import project_monotone
from .splines import SplineConfig, eval_basis, eval_basis_derivative, make_knots
from .wls import fit_wls, design_variance
from .records import SubjectRecord
from .model import (
    FitConfig,
    IndexParam,
    ModelFit,
    angles_to_theta,
    fit_global,
    fit_plsi,
    fitted_values,
    objective,
    predict,
    profile_fit,
)
from .metrics import adjusted_r2, confidence_bands, frechet_r2
from .clustering import elbow_curve, kgroups, pairwise_l2, residuals
from .interpret import index_derivative, mims_to_clinical, prediction_grid
from .synthetic import SynthConfig, generate

__version__ = "0.1.0"
