"""Ground-truth data generator for estimator-recovery tests.

Responses follow the partially linear single-index form with a surface that is
nondecreasing in t by construction: the intercept path carries a dominant
positive slope, covariates are clipped, and the link contribution is scaled so
that no combination can turn the t-slope negative.  Functional noise is added
and the result re-projected onto nondecreasing vectors.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .isotonic import project_monotone
from .model import IndexParam
from .quantiles import ProbabilityGrid, QuantileFunction
from .records import SubjectRecord

__all__ = ["SynthConfig", "Truth", "generate", "write_pipeline_inputs"]


LINKS = {
    "sigmoid-ramp": lambda u: 4.0 / (1.0 + np.exp(-8.0 * u)),
    "identity": lambda u: np.asarray(u, dtype=float),
    "flat": lambda u: np.zeros_like(np.asarray(u, dtype=float)),
}


@dataclass
class SynthConfig:
    n: int = 200
    p_x: int = 2
    p_z: int = 2
    theta0: tuple | None = None  # defaults to (0.6, 0.8) for p_x = 2
    link: str = "sigmoid-ramp"
    b: tuple | None = None  # linear slopes; defaults to alternating +/-0.5
    alpha0: tuple = (2.0, 8.0)  # intercept path a0 + a1 * t
    noise_sd: float = 0.5
    weight_scheme: str = "uniform"  # or "informative"
    n_strata: int = 1
    psus_per_stratum: int = 0  # 0 = each subject its own PSU
    clip: float = 2.5
    seed: int = 0
    m: int = 101


@dataclass(frozen=True)
class Truth:
    """Everything needed to recompute the noiseless surface independently."""

    theta0: np.ndarray
    b: np.ndarray
    alpha0: tuple
    link: str
    noise_sd: float
    seed: int

    def surface(self, x, z, grid: ProbabilityGrid) -> np.ndarray:
        """Noiseless quantile surface for one covariate pair."""
        x = np.asarray(x, dtype=float)
        z = np.asarray(z, dtype=float)
        t = grid.points
        a0, a1 = self.alpha0
        g = LINKS[self.link]
        u = float(self.theta0 @ x)
        return a0 + (a1 + float(z @ self.b) + float(g(u))) * t

    def to_dict(self):
        return {
            "theta0": list(self.theta0),
            "b": list(self.b),
            "alpha0": list(self.alpha0),
            "link": self.link,
            "noise_sd": self.noise_sd,
            "seed": self.seed,
        }


def _default_theta(p_x):
    if p_x == 1:
        return np.array([1.0])
    if p_x == 2:
        return np.array([0.6, 0.8])
    th = np.ones(p_x)
    return th / np.linalg.norm(th)


def generate(config: SynthConfig):
    """Draw a synthetic dataset; returns (records, truth)."""
    cfg = config
    if cfg.link not in LINKS:
        raise ValueError(f"unknown link {cfg.link!r}; choose from {sorted(LINKS)}")
    if cfg.weight_scheme not in ("uniform", "informative"):
        raise ValueError(f"unknown weight scheme {cfg.weight_scheme!r}")
    if cfg.noise_sd < 0:
        raise ValueError("noise_sd must be nonnegative")
    theta0 = (
        np.asarray(cfg.theta0, dtype=float) if cfg.theta0 is not None else _default_theta(cfg.p_x)
    )
    if theta0.shape != (cfg.p_x,):
        raise ValueError(f"theta0 must have length p_x={cfg.p_x}")
    theta0 = IndexParam(theta0 / np.linalg.norm(theta0)).theta
    b = (
        np.asarray(cfg.b, dtype=float)
        if cfg.b is not None
        else 0.5 * (-1.0) ** np.arange(cfg.p_z)
    )
    if b.shape != (cfg.p_z,):
        raise ValueError(f"b must have length p_z={cfg.p_z}")

    rng = np.random.default_rng(cfg.seed)
    grid = ProbabilityGrid.equidistant(cfg.m)
    t = grid.points
    g = LINKS[cfg.link]

    X = np.clip(rng.standard_normal((cfg.n, cfg.p_x)), -cfg.clip, cfg.clip)
    Z = np.clip(rng.standard_normal((cfg.n, cfg.p_z)), -cfg.clip, cfg.clip)
    u = X @ theta0
    a0, a1 = cfg.alpha0
    slope = a1 + Z @ b + g(u)
    if np.any(slope <= 0.05):
        raise ValueError(
            "inconsistent config: t-slope of the truth surface is not positive; "
            "increase alpha0[1] or shrink b / the link scale"
        )
    surface = a0 + np.outer(slope, t)  # n x m, nondecreasing rows

    # smooth mean-zero functional noise
    shapes = np.vstack([np.ones_like(t), t - 0.5, 0.5 * np.sin(np.pi * t)])
    xi = rng.standard_normal((cfg.n, 3))
    noisy = surface + cfg.noise_sd * (xi @ shapes)

    if cfg.weight_scheme == "uniform":
        w = np.ones(cfg.n)
    else:
        w = np.exp(0.4 * Z[:, 0])
        w *= cfg.n / w.sum()

    if cfg.n_strata > 1 or cfg.psus_per_stratum > 0:
        strata = rng.integers(0, max(cfg.n_strata, 1), size=cfg.n)
        if cfg.psus_per_stratum > 0:
            psus = rng.integers(0, cfg.psus_per_stratum, size=cfg.n)
            psu_ids = [f"h{h}_p{p}" for h, p in zip(strata, psus)]
        else:
            psu_ids = [f"s{i:05d}" for i in range(cfg.n)]
        stratum_ids = [f"h{h}" for h in strata]
    else:
        stratum_ids = ["0"] * cfg.n
        psu_ids = [f"s{i:05d}" for i in range(cfg.n)]

    records = []
    for i in range(cfg.n):
        vals = project_monotone(noisy[i]) if cfg.noise_sd > 0 else surface[i]
        records.append(
            SubjectRecord(
                subject_id=f"s{i:05d}",
                response=QuantileFunction(grid, vals),
                x=X[i],
                z=Z[i],
                weight=float(w[i]),
                stratum=stratum_ids[i],
                psu=psu_ids[i],
            )
        )
    truth = Truth(
        theta0=theta0, b=b, alpha0=tuple(cfg.alpha0), link=cfg.link,
        noise_sd=cfg.noise_sd, seed=cfg.seed,
    )
    return records, truth


def write_pipeline_inputs(records, series_path, covariates_path, seed=0,
                          days=4, minutes_per_day=660):
    """Emit raw-series and covariate CSVs in the formats ingestion reads.

    Minute-level measurements are drawn from each subject's distribution by
    inverse-transform sampling, spread over enough qualifying wear days to pass
    the default participation filter.
    """
    rng = np.random.default_rng(seed)
    with open(series_path, "w") as fh:
        fh.write("subject_id,time_days,measurement\n")
        for rec in records:
            draws = rec.response.evaluate(rng.uniform(size=days * minutes_per_day))
            # floor at a small positive value: the generator is for wear-time
            # activity, zeros would look like non-wear
            draws = np.maximum(draws, 0.01)
            j = 0
            for d in range(days):
                for minute in range(minutes_per_day):
                    tday = d + minute / 1440.0
                    fh.write(f"{rec.subject_id},{tday!r},{float(draws[j])!r}\n")
                    j += 1
    p_x = records[0].x.size
    p_z = records[0].z.size
    with open(covariates_path, "w") as fh:
        cols = (
            ["subject_id"]
            + [f"x{k}" for k in range(p_x)]
            + [f"z{k}" for k in range(p_z)]
            + ["weight", "stratum", "psu"]
        )
        fh.write(",".join(cols) + "\n")
        for rec in records:
            vals = (
                [rec.subject_id]
                + [repr(float(v)) for v in rec.x]
                + [repr(float(v)) for v in rec.z]
                + [repr(float(rec.weight)), rec.stratum, rec.psu]
            )
            fh.write(",".join(vals) + "\n")
