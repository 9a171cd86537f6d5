"""Command-line front end.

Exit codes: 0 success, 2 malformed input or configuration, 3 numerical failure.
The config file path can also be supplied through the PLFSI_CONFIG environment
variable.  All outputs are CSV/JSON and byte-reproducible for fixed inputs.
"""

from __future__ import annotations

import functools
import json
import os
import sys

import click
import numpy as np

from . import clustering, interpret, metrics
from .config import ConfigError, load_config
from .datasets import read_dataset, write_dataset
from .ingest import assemble_dataset
from .model import (
    FitConfig,
    ModelFit,
    OptimizationError,
    fit_global,
    fit_plsi,
    fitted_values,
    predict,
)
from .quantiles import write_quantile_csv
from .synthetic import SynthConfig, generate, write_pipeline_inputs

EXIT_INPUT_ERROR = 2
EXIT_NUMERICAL_ERROR = 3


def _handle_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (ConfigError, ValueError, FileNotFoundError, KeyError) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_INPUT_ERROR)
        except (OptimizationError, np.linalg.LinAlgError) as exc:
            click.echo(f"numerical failure: {exc}", err=True)
            sys.exit(EXIT_NUMERICAL_ERROR)

    return wrapper


def _config(path):
    if path is None:
        path = os.environ.get("PLFSI_CONFIG") or None
    return load_config(path)


def _parse_vector(text):
    return np.array([float(v) for v in text.split(",") if v.strip() != ""])


@click.group()
@click.option("--threads", type=int, default=None,
              help="Cap worker threads; results do not depend on this.")
def main(threads):
    """Distributional regression for activity quantile functions."""
    if threads is not None and threads < 1:
        raise click.BadParameter("--threads must be positive")


@main.command()
@click.option("--series", required=True, type=click.Path(exists=True))
@click.option("--covariates", required=True, type=click.Path(exists=True))
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--out", required=True, type=click.Path())
@_handle_errors
def ingest(series, covariates, config_path, out):
    """Filter raw activity series and assemble a dataset directory."""
    cfg = _config(config_path)
    records, exclusions, manifest = assemble_dataset(series, covariates, cfg.ingest)
    write_dataset(records, exclusions, manifest, out)
    click.echo(f"retained {len(records)} subjects, excluded {len(exclusions)}")


def _write_metrics_csv(path, rows):
    with open(path, "w") as fh:
        fh.write("model,r2,adj_r2,n,q\n")
        for r in rows:
            fh.write(f"{r['model']},{r['r2']!r},{r['adj_r2']!r},{r['n']},{r['q']}\n")


def _metrics_row(fit, records):
    yhat = fitted_values(fit, records)
    r2 = metrics.frechet_r2(records, yhat)
    q = fit.n_params
    return {
        "model": fit.model,
        "r2": r2,
        "adj_r2": metrics.adjusted_r2(r2, fit.n, q),
        "n": fit.n,
        "q": q,
    }


@main.command()
@click.option("--data", "data_dir", required=True, type=click.Path(exists=True))
@click.option("--model", "model_kind", type=click.Choice(["plsi", "global"]),
              default="plsi")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--out", required=True, type=click.Path())
@_handle_errors
def fit(data_dir, model_kind, config_path, out):
    """Fit the single-index or global model; write fit, metrics and start log."""
    cfg = _config(config_path)
    records, manifest = read_dataset(data_dir)
    x_names = manifest["x_columns"]
    z_names = manifest["z_columns"]
    try:
        if model_kind == "plsi":
            mf, start_log = fit_plsi(records, cfg.fit, x_names, z_names)
        else:
            mf, start_log = fit_global(records, cfg.fit, x_names, z_names)
    except OptimizationError as exc:
        with open(out + ".partial", "w") as fh:
            json.dump({"diagnostics": exc.diagnostics}, fh, sort_keys=True, indent=1)
        raise
    mf.save(out)
    stem = os.path.splitext(out)[0]
    _write_metrics_csv(stem + "_metrics.csv", [_metrics_row(mf, records)])
    with open(stem + "_starts.csv", "w") as fh:
        fh.write("start_angles,final_angles,objective,converged,n_iter\n")
        for e in start_log:
            fh.write(
                f"\"{e['start_angles']}\",\"{e['final_angles']}\","
                f"{e['objective']!r},{e['converged']},{e['n_iter']}\n"
            )
    click.echo(f"{model_kind} fit written to {out} (objective={mf.objective:.6g})")


@main.command("predict")
@click.option("--fit", "fit_path", required=True, type=click.Path(exists=True))
@click.option("--x", "x_text", required=True, help="comma-separated index covariates")
@click.option("--z", "z_text", required=True, help="comma-separated linear covariates")
@click.option("--out", required=True, type=click.Path())
@_handle_errors
def predict_cmd(fit_path, x_text, z_text, out):
    """Predict a quantile function at one covariate pair."""
    mf = ModelFit.load(fit_path)
    qf = predict(mf, _parse_vector(z_text), _parse_vector(x_text))
    write_quantile_csv(out, ["prediction"], [qf])
    click.echo(f"prediction written to {out}")


@main.command("metrics")
@click.option("--fit", "fit_path", required=True, type=click.Path(exists=True))
@click.option("--data", "data_dir", required=True, type=click.Path(exists=True))
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--out", required=True, type=click.Path())
@click.option("--bands-out", type=click.Path(), default=None,
              help="also write pointwise confidence bands")
@_handle_errors
def metrics_cmd(fit_path, data_dir, config_path, out, bands_out):
    """Frechet R2 / adjusted R2 for a saved fit on a dataset."""
    cfg = _config(config_path)
    mf = ModelFit.load(fit_path)
    records, _ = read_dataset(data_dir)
    _write_metrics_csv(out, [_metrics_row(mf, records)])
    if bands_out:
        rows = metrics.confidence_bands(
            mf, level=cfg.fit.level, reporting_max_t=cfg.reporting_max_t
        )
        with open(bands_out, "w") as fh:
            fh.write("coef,t,est,lo,hi\n")
            for r in rows:
                fh.write(
                    f"{r['coef']},{r['t']!r},{r['est']!r},{r['lo']!r},{r['hi']!r}\n"
                )
    click.echo(f"metrics written to {out}")


@main.command()
@click.option("--fit", "fit_path", required=True, type=click.Path(exists=True))
@click.option("--data", "data_dir", required=True, type=click.Path(exists=True))
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--kmax", type=int, default=None)
@click.option("--k", type=int, default=None,
              help="final cluster count; defaults to the elbow suggestion")
@click.option("--join", "join_path", type=click.Path(exists=True), default=None,
              help="CSV whose columns are joined to the cluster table by subject_id")
@click.option("--out", required=True, type=click.Path())
@_handle_errors
def cluster(fit_path, data_dir, config_path, kmax, k, join_path, out):
    """Cluster quantile residuals into activity phenotypes."""
    import pandas as pd

    cfg = _config(config_path)
    kmax = kmax or cfg.cluster_kmax
    mf = ModelFit.load(fit_path)
    records, _ = read_dataset(data_dir)
    res = clustering.residuals(mf, records)
    D = clustering.pairwise_l2(res, grid=mf.grid)
    elbow = clustering.elbow_curve(
        D, kmax, seed=cfg.cluster_seed, restarts=cfg.cluster_restarts
    )
    os.makedirs(out, exist_ok=True)
    with open(os.path.join(out, "elbow.csv"), "w") as fh:
        fh.write("k,dispersion,gini\n")
        for row in elbow["curve"]:
            fh.write(f"{row['k']},{row['dispersion']!r},{row['gini']!r}\n")
    chosen = k or elbow["suggested_k"] or 1
    result = clustering.kgroups(
        D, chosen, seed=cfg.cluster_seed, restarts=cfg.cluster_restarts
    )
    table = pd.DataFrame(
        {"subject_id": [r.subject_id for r in res], "cluster": result.labels}
    )
    if join_path:
        extra = pd.read_csv(join_path, dtype={"subject_id": str})
        table = table.merge(extra, on="subject_id", how="left")
    table.to_csv(os.path.join(out, "clusters.csv"), index=False)
    with open(os.path.join(out, "summary.json"), "w") as fh:
        json.dump(
            {
                "k": int(chosen),
                "suggested_k": elbow["suggested_k"],
                "confident": elbow["confident"],
                "dispersion": result.dispersion,
                "gini": result.gini,
            },
            fh,
            sort_keys=True,
            indent=1,
        )
        fh.write("\n")
    click.echo(
        f"k={chosen} (suggested {elbow['suggested_k']}, "
        f"confident={elbow['confident']}); outputs in {out}"
    )


@main.command()
@click.option("--fit", "fit_path", required=True, type=click.Path(exists=True))
@click.option("--points", type=int, default=100, help="index-grid resolution")
@click.option("--t-list", default="0.5,0.75,0.9,0.97")
@click.option("--out", required=True, type=click.Path())
@_handle_errors
def derivative(fit_path, points, t_list, out):
    """Derivative of the raw prediction with respect to the single index."""
    mf = ModelFit.load(fit_path)
    if mf.model != "plsi":
        raise ValueError("derivatives require a single-index fit")
    ts = [float(v) for v in t_list.split(",")]
    lo, hi = mf.spline.boundary
    us = np.linspace(lo, hi, points)
    with open(out, "w") as fh:
        fh.write("u,t,dyd_u,extrapolated\n")
        for u in us:
            for t in ts:
                val, extr = interpret.index_derivative(mf, float(u), t)
                fh.write(f"{float(u)!r},{t!r},{val!r},{extr}\n")
    click.echo(f"derivatives written to {out}")


@main.command()
@click.option("--out", required=True, type=click.Path())
@click.option("--n", type=int, default=200)
@click.option("--seed", type=int, default=0)
@click.option("--link", type=click.Choice(["sigmoid-ramp", "identity", "flat"]),
              default="sigmoid-ramp")
@click.option("--noise-sd", type=float, default=0.5)
@click.option("--p-x", type=int, default=2)
@click.option("--p-z", type=int, default=2)
@_handle_errors
def simulate(out, n, seed, link, noise_sd, p_x, p_z):
    """Generate synthetic raw series + covariates in the ingestion formats."""
    cfg = SynthConfig(n=n, seed=seed, link=link, noise_sd=noise_sd, p_x=p_x, p_z=p_z)
    records, truth = generate(cfg)
    os.makedirs(out, exist_ok=True)
    write_pipeline_inputs(
        records,
        os.path.join(out, "series.csv"),
        os.path.join(out, "covariates.csv"),
        seed=seed,
    )
    with open(os.path.join(out, "truth.json"), "w") as fh:
        json.dump(truth.to_dict(), fh, sort_keys=True, indent=1)
        fh.write("\n")
    click.echo(f"simulated {n} subjects into {out}")


if __name__ == "__main__":
    main()
