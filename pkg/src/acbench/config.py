"""Run configuration (YAML) and the digest stamped on every output file."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Mapping

import yaml

from acbench.models.grids import load_grid
from acbench.models.registry import MODEL_NAMES

# keys that locate inputs/outputs or set parallelism; they do not change results
NON_RESULT_KEYS = ("dataset", "grid", "out_dir", "jobs", "plots")
TWIN_KEYS = ("phase1_epochs", "phase2_epochs", "w_diff", "weighting")


class ConfigError(ValueError):
    """Invalid run configuration."""


@dataclass
class RunConfig:
    dataset: str | None = None
    models: list[str] = field(default_factory=lambda: list(MODEL_NAMES))
    grid: str | None = None
    k: int = 2
    m: int = 3
    master_seed: int = 0
    d_crit: float = 1.5
    budget: int = 10
    twin: dict = field(default_factory=lambda: {"models": ["ECFP_MLP", "PDV_MLP", "GIN_MLP"],
                                                "phase1_epochs": 250, "phase2_epochs": 250,
                                                "w_diff": 1.0, "weighting": "proportional"})
    out_dir: str = "acbench_out"
    jobs: int = 1
    plots: bool = True

    def validate(self) -> "RunConfig":
        if self.models == "all" or self.models == ["all"]:
            self.models = list(MODEL_NAMES)
        unknown = [m for m in self.models if m not in MODEL_NAMES]
        if unknown:
            raise ConfigError(f"unknown models {unknown}; choose from {', '.join(MODEL_NAMES)} or 'all'")
        if self.k < 2 or self.m < 1:
            raise ConfigError("need k >= 2 and m >= 1")
        if not self.d_crit > 0:
            raise ConfigError("d_crit must be positive")
        if self.budget < 1 or self.jobs < 1:
            raise ConfigError("budget and jobs must be >= 1")
        if self.grid is not None and not Path(self.grid).is_file():
            raise ConfigError(f"grid file {self.grid} does not exist")
        if self.dataset is not None and not Path(self.dataset).is_file():
            raise ConfigError(f"dataset {self.dataset} does not exist")
        unknown_twin = set(self.twin) - set(TWIN_KEYS) - {"models"}
        if unknown_twin:
            raise ConfigError(f"unknown twin keys {sorted(unknown_twin)}")
        for name in self.twin.get("models", []):
            if name not in MODEL_NAMES or not name.endswith("_MLP"):
                raise ConfigError(f"twin training needs a network model, got {name!r}")
        return self

    @property
    def twin_schedule(self) -> dict:
        return {k: self.twin[k] for k in TWIN_KEYS if k in self.twin}

    def grid_dict(self) -> dict:
        return load_grid(self.grid)

    def result_fields(self) -> dict:
        """Everything that can change a result: run parameters plus the resolved grid contents."""
        out = {k: v for k, v in asdict(self).items() if k not in NON_RESULT_KEYS}
        out["grid"] = self.grid_dict()
        return out

    def digest(self) -> str:
        payload = json.dumps(self.result_fields(), sort_keys=True, separators=(",", ":"))
        return hashlib.blake2b(payload.encode("utf-8"), digest_size=8).hexdigest()


def load_config(path: str | Path | None, overrides: Mapping[str, Any] | None = None) -> RunConfig:
    data: dict = {}
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"config file {p} does not exist")
        data = yaml.safe_load(p.read_text()) or {}
        if not isinstance(data, dict):
            raise ConfigError(f"{p}: expected a key-value mapping")
    known = {f.name for f in fields(RunConfig)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config keys {sorted(unknown)}")
    for key, value in (overrides or {}).items():
        if value is not None:
            data[key] = value
    if "twin" in data:
        data["twin"] = {**RunConfig().twin, **(data["twin"] or {})}
    try:
        return RunConfig(**data).validate()
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc

