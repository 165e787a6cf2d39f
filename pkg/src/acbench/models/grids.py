"""Hyperparameter grid files and uniform sampling from them."""

from __future__ import annotations

import copy
from importlib import resources
from pathlib import Path
from typing import Mapping

import numpy as np
import yaml

GRID_SECTIONS = {
    "rf": ("n_trees", "max_depth", "min_leaf", "max_features"),
    "knn": ("k",),
    "mlp": ("hidden_width", "depth", "dropout", "weight_decay", "lr", "lr_decay_factor",
            "lr_decay_interval", "batch_size", "epochs"),
    "gin": ("layers", "width", "head_width", "head_depth", "dropout", "weight_decay", "lr",
            "lr_decay_factor", "lr_decay_interval", "batch_size", "epochs"),
}
# keys that only matter for an end-to-end MLP head
GIN_HEAD_KEYS = ("head_width", "head_depth")


def validate_grid(grid: Mapping) -> dict:
    out = {}
    for section, values in grid.items():
        if section not in GRID_SECTIONS:
            raise ValueError(f"unknown grid section {section!r}")
        unknown = set(values) - set(GRID_SECTIONS[section])
        if unknown:
            raise ValueError(f"grid section {section!r}: unknown keys {sorted(unknown)}")
        for key, opts in values.items():
            if not isinstance(opts, list) or not opts:
                raise ValueError(f"grid {section}.{key} must be a non-empty list")
        out[section] = {k: list(v) for k, v in values.items()}
    return out


def default_grid() -> dict:
    text = resources.files("acbench.data").joinpath("default_grid.yaml").read_text()
    return validate_grid(yaml.safe_load(text))


def load_grid(path: str | Path | None) -> dict:
    """Default grid with the sections/keys of ``path`` overriding it."""
    grid = default_grid()
    if path is None:
        return grid
    override = validate_grid(yaml.safe_load(Path(path).read_text()) or {})
    for section, values in override.items():
        grid[section].update(values)
    return grid


def sample_config(space: Mapping, rng: np.random.Generator) -> dict:
    """One value per key, uniformly; nested sections are sampled recursively in sorted key order."""
    out = {}
    for key in sorted(space):
        opts = space[key]
        if isinstance(opts, Mapping):
            out[key] = sample_config(opts, rng)
        else:
            out[key] = copy.deepcopy(opts[int(rng.integers(len(opts)))])
    return out


def grid_size(space: Mapping) -> int:
    n = 1
    for opts in space.values():
        n *= grid_size(opts) if isinstance(opts, Mapping) else len(opts)
    return n
