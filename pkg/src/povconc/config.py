"""Run configuration, read from a JSON file."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

from .analysis import DEFAULT_FLAT_TOL
from .errors import ConfigError
from .indices import ACO_ORDERINGS, POPULATION
from .ingest import SNAPSHOT_SCOPES

KNOWN_KEYS = {
    "tracts", "places", "overrides", "aco_ordering", "high_poverty_percentile",
    "bucket_reference", "flat_tol", "weighted_quantiles", "weighted_group_means",
    "place_names", "reference_cells",
}


@dataclass
class Config:
    tracts: str | None = None
    places: str | None = None
    overrides: str | None = None
    aco_ordering: str = POPULATION
    high_poverty_percentile: dict[str, int] = field(default_factory=dict)
    # msa None means "each metro's own"; year None means its latest year
    bucket_reference: dict = field(default_factory=lambda: {"msa": None, "year": 2015, "scope": "city"})
    flat_tol: float = DEFAULT_FLAT_TOL
    weighted_quantiles: bool = False
    weighted_group_means: bool = False
    place_names: dict[str, str] = field(default_factory=dict)
    reference_cells: list[dict] = field(default_factory=list)

    def percentile_for(self, msa: str) -> int:
        return self.high_poverty_percentile.get(msa, 75)

    def echo(self) -> dict:
        return asdict(self)


def config_from_dict(d: dict) -> Config:
    if not isinstance(d, dict):
        raise ConfigError("config must be a JSON object")
    unknown = sorted(set(d) - KNOWN_KEYS)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    cfg = Config(**{k: v for k, v in d.items() if k != "bucket_reference"})
    if "bucket_reference" in d:
        ref = {"msa": None, "year": 2015, "scope": "city"}
        ref.update(d["bucket_reference"] or {})
        cfg.bucket_reference = ref

    if cfg.aco_ordering not in ACO_ORDERINGS:
        raise ConfigError(f"aco_ordering must be one of {ACO_ORDERINGS}")
    for msa, p in cfg.high_poverty_percentile.items():
        if p not in (50, 75):
            raise ConfigError(f"high_poverty_percentile for {msa} must be 50 or 75, got {p}")
    if cfg.bucket_reference.get("scope") not in SNAPSHOT_SCOPES:
        raise ConfigError(f"bucket_reference scope must be one of {SNAPSHOT_SCOPES}")
    if not isinstance(cfg.flat_tol, (int, float)) or cfg.flat_tol < 0:
        raise ConfigError("flat_tol must be a non-negative number")
    cfg.flat_tol = float(cfg.flat_tol)
    for cell in cfg.reference_cells:
        if not {"msa", "year", "percentile", "cell"} <= set(cell):
            raise ConfigError("reference_cells entries need msa, year, percentile, cell")
    return cfg


def load_config(path: str) -> Config:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc.msg}, line {exc.lineno})") from None
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    return config_from_dict(data)
