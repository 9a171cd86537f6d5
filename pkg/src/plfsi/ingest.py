"""Accelerometry quality filters and dataset assembly.

Raw input is a long-format CSV of minute-level activity measurements plus a
covariate table.  Non-wear minutes are removed, subjects with too few
qualifying wear days are excluded, and each retained subject's pooled
wear-time measurements are summarized into an empirical quantile function.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .quantiles import ProbabilityGrid, empirical_quantile
from .records import SubjectRecord

__all__ = [
    "IngestConfig",
    "WearDay",
    "detect_nonwear",
    "compute_wear_days",
    "filter_participants",
    "assemble_dataset",
]

MINUTES_PER_DAY = 1440


@dataclass
class IngestConfig:
    x_columns: list = field(default_factory=lambda: ["x0", "x1"])
    z_columns: list = field(default_factory=lambda: ["z0", "z1"])
    weight_column: str = "weight"
    stratum_column: str = "stratum"
    psu_column: str = "psu"
    standardize: bool = True
    grid_m: int = 101
    days_required: int = 3
    minutes_required: int = 600  # 10 hours


@dataclass(frozen=True)
class WearDay:
    day: int
    wear_minutes: int

    def __post_init__(self):
        if not 0 <= self.wear_minutes <= MINUTES_PER_DAY:
            raise ValueError("wear_minutes must be in [0, 1440]")


def detect_nonwear(minute_series) -> np.ndarray:
    """Flag non-wear minutes in a minute-level activity series.

    A minute is non-wear when it belongs to some run of at least 60 minutes
    in which every count is zero, except for up to 2 interruption minutes
    with counts strictly between 0 and 5.  Interruption minutes count toward
    the run length and are flagged with it.
    """
    c = np.asarray(minute_series, dtype=float)
    if c.ndim != 1:
        raise ValueError("minute series must be 1-d")
    if np.any(c < 0):
        raise ValueError("negative activity counts")
    n = c.size
    mark = np.zeros(n + 1, dtype=int)
    r = 0
    k = 0  # interruption minutes currently in [l, r)
    for left in range(n):
        if r < left:
            r = left
            k = 0
        while r < n:
            cr = c[r]
            if cr >= 5:
                break
            if cr > 0:
                if k == 2:
                    break
                k += 1
            r += 1
        if r - left >= 60:
            mark[left] += 1
            mark[r] -= 1
        if r > left and 0 < c[left] < 5:
            k -= 1
    return np.cumsum(mark[:n]) > 0


def compute_wear_days(times_days, measurements) -> list:
    """Per-day wear minutes after non-wear removal (minute-level rows)."""
    t = np.asarray(times_days, dtype=float)
    a = np.asarray(measurements, dtype=float)
    worn = ~detect_nonwear(a)
    days = np.floor(t).astype(int)
    out = []
    for d in np.unique(days):
        minutes = int(np.sum(worn & (days == d)))
        out.append(WearDay(day=int(d), wear_minutes=min(minutes, MINUTES_PER_DAY)))
    return out


def filter_participants(records, days_required=3, minutes_required=600):
    """Retain subjects having enough days with enough wear time.

    ``records`` is an iterable of (subject_id, list of WearDay).
    """
    retained = []
    for sid, wear_days in records:
        qualifying = sum(1 for d in wear_days if d.wear_minutes >= minutes_required)
        if qualifying >= days_required:
            retained.append(sid)
    return retained


def _standardize(df, columns):
    """Center/scale numeric columns; indicator columns (<= 2 levels) are kept."""
    stats = {}
    for col in columns:
        vals = df[col].to_numpy(dtype=float)
        if np.unique(vals).size <= 2:
            continue
        mean = float(vals.mean())
        sd = float(vals.std(ddof=0))
        if sd == 0:
            raise ValueError(f"column {col!r} is constant; cannot standardize")
        df[col] = (vals - mean) / sd
        stats[col] = {"mean": mean, "sd": sd}
    return stats


def assemble_dataset(series_path, covariates_path, config: IngestConfig | None = None):
    """Build SubjectRecords from a raw series CSV and a covariate CSV.

    Returns (records, exclusions, manifest).  ``exclusions`` is a list of
    (subject_id, reason) with machine-readable reason codes; ``manifest``
    records the grid, standardization constants and filter settings.
    """
    cfg = config or IngestConfig()
    grid = ProbabilityGrid.equidistant(cfg.grid_m)

    series = pd.read_csv(series_path, float_precision="round_trip")
    needed = {"subject_id", "time_days", "measurement"}
    if not needed.issubset(series.columns):
        raise ValueError(f"series file must have columns {sorted(needed)}")
    cov = pd.read_csv(
        covariates_path, dtype={"subject_id": str}, float_precision="round_trip"
    )
    cov_needed = set(
        cfg.x_columns + cfg.z_columns + ["subject_id", cfg.weight_column]
    )
    missing_cols = cov_needed - set(cov.columns)
    if missing_cols:
        raise ValueError(f"covariate file missing columns {sorted(missing_cols)}")
    series["subject_id"] = series["subject_id"].astype(str)

    series_ids = set(series["subject_id"])
    cov_ids = set(cov["subject_id"])
    orphans = sorted(series_ids ^ cov_ids)
    if orphans:
        raise ValueError(f"subject ids do not match across files: {orphans}")

    exclusions = []
    wear_samples = {}
    for sid, g in series.groupby("subject_id", sort=True):
        g = g.sort_values("time_days", kind="stable")
        meas = g["measurement"].to_numpy(dtype=float)
        worn = ~detect_nonwear(meas)
        wear_days = compute_wear_days(g["time_days"].to_numpy(), meas)
        ok = filter_participants(
            [(sid, wear_days)], cfg.days_required, cfg.minutes_required
        )
        if not ok:
            exclusions.append((sid, "insufficient_wear"))
            continue
        wear_samples[sid] = meas[worn]

    retained_ids = sorted(wear_samples)
    cov = cov.set_index("subject_id").loc[retained_ids].reset_index()
    std_stats = {}
    if cfg.standardize:
        std_stats = _standardize(cov, list(dict.fromkeys(cfg.x_columns + cfg.z_columns)))

    has_stratum = cfg.stratum_column in cov.columns
    has_psu = cfg.psu_column in cov.columns
    records = []
    for _, row in cov.iterrows():
        sid = row["subject_id"]
        records.append(
            SubjectRecord(
                subject_id=sid,
                response=empirical_quantile(wear_samples[sid], grid),
                x=np.array([row[c] for c in cfg.x_columns], dtype=float),
                z=np.array([row[c] for c in cfg.z_columns], dtype=float),
                weight=float(row[cfg.weight_column]),
                stratum=str(row[cfg.stratum_column]) if has_stratum else "0",
                psu=str(row[cfg.psu_column]) if has_psu else str(sid),
            )
        )
    manifest = {
        "format_version": 1,
        "grid_m": cfg.grid_m,
        "n_input": len(series_ids),
        "n_retained": len(records),
        "standardization": std_stats,
        "x_columns": list(cfg.x_columns),
        "z_columns": list(cfg.z_columns),
        "days_required": cfg.days_required,
        "minutes_required": cfg.minutes_required,
    }
    return records, exclusions, manifest
