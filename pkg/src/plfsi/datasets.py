"""On-disk dataset layout shared by the CLI subcommands.

A dataset directory holds:
  quantiles.csv   response quantile functions, one row per subject
  dataset.csv     covariates, weights and survey design columns
  manifest.json   grid size, standardization constants, filter settings
  exclusions.csv  subjects dropped during ingestion and why
"""

from __future__ import annotations

import json
import os

import numpy as np
import pandas as pd

from .quantiles import read_quantile_csv, write_quantile_csv
from .records import SubjectRecord

__all__ = ["write_dataset", "read_dataset"]


def write_dataset(records, exclusions, manifest, out_dir):
    os.makedirs(out_dir, exist_ok=True)
    ids = [r.subject_id for r in records]
    write_quantile_csv(
        os.path.join(out_dir, "quantiles.csv"), ids, [r.response for r in records]
    )
    x_cols = manifest["x_columns"]
    z_cols = manifest["z_columns"]
    with open(os.path.join(out_dir, "dataset.csv"), "w") as fh:
        fh.write(
            ",".join(["subject_id"] + x_cols + z_cols + ["weight", "stratum", "psu"])
            + "\n"
        )
        for r in records:
            vals = (
                [r.subject_id]
                + [repr(float(v)) for v in r.x]
                + [repr(float(v)) for v in r.z]
                + [repr(float(r.weight)), r.stratum, r.psu]
            )
            fh.write(",".join(vals) + "\n")
    with open(os.path.join(out_dir, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=1)
        fh.write("\n")
    with open(os.path.join(out_dir, "exclusions.csv"), "w") as fh:
        fh.write("subject_id,reason\n")
        for sid, reason in sorted(exclusions):
            fh.write(f"{sid},{reason}\n")


def read_dataset(data_dir):
    """Load a dataset directory; returns (records, manifest)."""
    with open(os.path.join(data_dir, "manifest.json")) as fh:
        manifest = json.load(fh)
    ids, qfs, grid = read_quantile_csv(os.path.join(data_dir, "quantiles.csv"))
    cov = pd.read_csv(
        os.path.join(data_dir, "dataset.csv"),
        dtype={"subject_id": str},
        float_precision="round_trip",
    )
    cov = cov.set_index("subject_id")
    x_cols = manifest["x_columns"]
    z_cols = manifest["z_columns"]
    records = []
    for sid, qf in zip(ids, qfs):
        row = cov.loc[sid]
        records.append(
            SubjectRecord(
                subject_id=sid,
                response=qf,
                x=np.array([row[c] for c in x_cols], dtype=float),
                z=np.array([row[c] for c in z_cols], dtype=float),
                weight=float(row["weight"]),
                stratum=str(row["stratum"]),
                psu=str(row["psu"]),
            )
        )
    return records, manifest
