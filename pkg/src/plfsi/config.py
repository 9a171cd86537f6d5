"""INI-style configuration shared by the CLI subcommands.

Sections and keys (all optional; defaults shown by ``plfsi --help``):

  [data]       x_columns, z_columns, weight_column, stratum_column,
               psu_column, standardize, grid_m, days_required, minutes_required
  [spline]     order, interior_knots
  [optimizer]  starts_per_dim, max_iter, tol, fd_step
  [inference]  level, reporting_max_t, compute_bands
  [cluster]    restarts, seed, kmax
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass

from .ingest import IngestConfig
from .model import FitConfig

__all__ = ["AppConfig", "load_config", "ConfigError"]


class ConfigError(ValueError):
    pass


VALID_KEYS = {
    "data": [
        "x_columns",
        "z_columns",
        "weight_column",
        "stratum_column",
        "psu_column",
        "standardize",
        "grid_m",
        "days_required",
        "minutes_required",
    ],
    "spline": ["order", "interior_knots"],
    "optimizer": ["starts_per_dim", "max_iter", "tol", "fd_step"],
    "inference": ["level", "reporting_max_t", "compute_bands"],
    "cluster": ["restarts", "seed", "kmax"],
}

_BOOL = {"true": True, "false": False, "1": True, "0": False, "yes": True, "no": False}


def _bool(value):
    try:
        return _BOOL[value.strip().lower()]
    except KeyError:
        raise ConfigError(f"expected a boolean, got {value!r}")


def _csv_list(value):
    return [v.strip() for v in value.split(",") if v.strip()]


@dataclass
class AppConfig:
    ingest: IngestConfig
    fit: FitConfig
    reporting_max_t: float = 0.97
    cluster_restarts: int = 10
    cluster_seed: int = 0
    cluster_kmax: int = 8


def load_config(path=None) -> AppConfig:
    cfg = AppConfig(ingest=IngestConfig(), fit=FitConfig())
    if path is None:
        return cfg
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ConfigError(f"cannot read config file {path}")
    for section in parser.sections():
        if section not in VALID_KEYS:
            raise ConfigError(
                f"unknown config section [{section}]; valid sections: "
                f"{sorted(VALID_KEYS)}"
            )
        for key, value in parser.items(section):
            if key not in VALID_KEYS[section]:
                raise ConfigError(
                    f"unknown key {key!r} in [{section}]; valid keys: "
                    f"{VALID_KEYS[section]}"
                )
            _apply(cfg, section, key, value)
    return cfg


def _apply(cfg: AppConfig, section, key, value):
    try:
        if section == "data":
            ing = cfg.ingest
            if key in ("x_columns", "z_columns"):
                setattr(ing, key, _csv_list(value))
            elif key in ("weight_column", "stratum_column", "psu_column"):
                setattr(ing, key, value.strip())
            elif key == "standardize":
                ing.standardize = _bool(value)
            else:  # grid_m, days_required, minutes_required
                setattr(ing, key, int(value))
        elif section == "spline":
            if key == "order":
                cfg.fit.spline_order = int(value)
            else:
                cfg.fit.interior_knots = int(value)
        elif section == "optimizer":
            if key in ("tol", "fd_step"):
                setattr(cfg.fit, key, float(value))
            else:
                setattr(cfg.fit, key, int(value))
        elif section == "inference":
            if key == "level":
                cfg.fit.level = float(value)
            elif key == "reporting_max_t":
                cfg.reporting_max_t = float(value)
            else:
                cfg.fit.compute_bands = _bool(value)
        elif section == "cluster":
            setattr(cfg, f"cluster_{key}", int(value))
    except ValueError as exc:
        raise ConfigError(f"bad value for {key!r} in [{section}]: {exc}") from exc
