"""Subject-level records consumed by the regression modules."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .quantiles import QuantileFunction

__all__ = ["SubjectRecord", "stack_records"]


@dataclass(frozen=True)
class SubjectRecord:
    """Distributional response plus covariates and survey design info.

    ``x`` feeds the single-index (nonlinear) part, ``z`` the linear part.
    ``weight`` is the survey weight (inverse inclusion probability).  When no
    design information is available each subject is its own PSU in one stratum,
    which reduces the linearization variance to the heteroskedasticity-robust
    sandwich.
    """

    subject_id: str
    response: QuantileFunction
    x: np.ndarray
    z: np.ndarray
    weight: float = 1.0
    stratum: str = "0"
    psu: str = ""

    def __post_init__(self):
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float))
        object.__setattr__(self, "z", np.asarray(self.z, dtype=float))
        if self.weight <= 0 or not np.isfinite(self.weight):
            raise ValueError(f"{self.subject_id}: weight must be positive")
        if not (np.all(np.isfinite(self.x)) and np.all(np.isfinite(self.z))):
            raise ValueError(f"{self.subject_id}: covariates must be finite")
        if self.psu == "":
            object.__setattr__(self, "psu", str(self.subject_id))


def stack_records(records):
    """Stack a list of records into (ids, Y, X, Z, w, strata, psus, grid)."""
    records = list(records)
    if not records:
        raise ValueError("no records")
    grid = records[0].response.grid
    for r in records[1:]:
        if r.response.grid != grid:
            raise ValueError("records are on different probability grids")
    ids = [r.subject_id for r in records]
    Y = np.vstack([r.response.values for r in records])
    X = np.vstack([r.x for r in records])
    Z = (
        np.vstack([r.z for r in records])
        if records[0].z.size
        else np.empty((len(records), 0))
    )
    w = np.array([r.weight for r in records])
    strata = np.array([r.stratum for r in records])
    psus = np.array([r.psu for r in records])
    return ids, Y, X, Z, w, strata, psus, grid
