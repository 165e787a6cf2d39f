"""The nine representation x regressor models behind one fit/predict contract."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np

from acbench.featurize import descriptor_matrix, ecfp_matrix
from acbench.models.common import MolGraph, TrainSettings, as_molecules
from acbench.models.forest import ForestRegressor
from acbench.models.gin import GINRegressor
from acbench.models.grids import GIN_HEAD_KEYS
from acbench.models.knn import KNNRegressor
from acbench.models.mlp import MLPRegressor

REPRESENTATIONS = ("ECFP", "PDV", "GIN")
REGRESSORS = ("RF", "KNN", "MLP")
MODEL_NAMES = tuple(f"{rep}_{reg}" for rep in REPRESENTATIONS for reg in REGRESSORS)
KNN_METRIC = {"ECFP": "tanimoto", "PDV": "std_euclidean", "GIN": "euclidean"}


def split_name(name: str) -> tuple[str, str]:
    if name not in MODEL_NAMES:
        raise ValueError(f"unknown model {name!r}; choose from {', '.join(MODEL_NAMES)}")
    rep, reg = name.split("_")
    return rep, reg


def featurize(representation: str, mols: Sequence) -> Any:
    """Model input for a list of molecules: bit matrix, descriptor matrix or graph list."""
    mols = as_molecules(mols)
    if representation == "ECFP":
        return ecfp_matrix(mols)
    if representation == "PDV":
        return descriptor_matrix(mols)
    if representation == "GIN":
        return [MolGraph.from_molecule(m) for m in mols]
    raise ValueError(f"unknown representation {representation!r}")


def take(features: Any, idx: Sequence[int]) -> Any:
    if isinstance(features, np.ndarray):
        return features[np.asarray(idx, dtype=np.int64)]
    return [features[i] for i in idx]


def n_rows(features: Any) -> int:
    return features.shape[0] if isinstance(features, np.ndarray) else len(features)


def model_space(name: str, grid: Mapping) -> dict:
    """Hyperparameter space of one model, composed from the grid sections."""
    rep, reg = split_name(name)
    if rep == "GIN":
        if reg == "MLP":
            return dict(grid["gin"])
        frozen = {k: v for k, v in grid["gin"].items() if k not in GIN_HEAD_KEYS}
        return {"gin": frozen, reg.lower(): dict(grid[reg.lower()])}
    return dict(grid[reg.lower()])


def _forest(params: Mapping, seed: int) -> ForestRegressor:
    return ForestRegressor(n_trees=params.get("n_trees", 100), max_depth=params.get("max_depth"),
                           min_leaf=params.get("min_leaf", 1), max_features=params.get("max_features", 1.0),
                           seed=seed)


def _gin(params: Mapping, head: str, seed: int) -> GINRegressor:
    return GINRegressor(layers=params.get("layers", 2), width=params.get("width", 64), head=head,
                        head_width=params.get("head_width", 64), head_depth=params.get("head_depth", 1),
                        dropout=params.get("dropout", 0.0), settings=TrainSettings.from_params(params), seed=seed)


@dataclass
class ClampedKNN:
    """kNN whose k is capped at the training-set size."""

    k: int
    metric: str
    inner: KNNRegressor | None = None

    def fit(self, x: np.ndarray, y: np.ndarray) -> "ClampedKNN":
        self.inner = KNNRegressor(min(int(self.k), len(y)), self.metric).fit(x, y)
        return self

    def predict(self, x: np.ndarray) -> np.ndarray:
        return self.inner.predict(x)


@dataclass
class FrozenGINRegressor:
    """Linear-head GIN trained on the labels, then frozen; a downstream model fits its embeddings."""

    gin: GINRegressor
    downstream: Any

    def fit(self, graphs: Sequence[MolGraph], y: np.ndarray) -> "FrozenGINRegressor":
        self.gin.fit(graphs, y)
        self.downstream.fit(self.gin.embed(graphs), y)
        return self

    def predict(self, graphs: Sequence[MolGraph]) -> np.ndarray:
        return self.downstream.predict(self.gin.embed(graphs))


def build_regressor(name: str, params: Mapping, seed: int):
    rep, reg = split_name(name)
    if rep == "GIN" and reg != "MLP":
        gin = _gin(params["gin"], "linear_head", seed)
        sub = params[reg.lower()]
        down = _forest(sub, seed) if reg == "RF" else ClampedKNN(int(sub["k"]), KNN_METRIC[rep])
        return FrozenGINRegressor(gin, down)
    if rep == "GIN":
        return _gin(params, "mlp_head", seed)
    if reg == "RF":
        return _forest(params, seed)
    if reg == "KNN":
        return ClampedKNN(int(params["k"]), KNN_METRIC[rep])
    return MLPRegressor(hidden_width=params.get("hidden_width", 128), depth=params.get("depth", 2),
                        dropout=params.get("dropout", 0.0), settings=TrainSettings.from_params(params), seed=seed)


@dataclass
class QSARModel:
    """A named model with fixed hyperparameters; fit/predict take molecules or compound records."""

    name: str
    params: dict
    seed: int = 0
    regressor: Any = field(default=None, repr=False)

    @property
    def representation(self) -> str:
        return split_name(self.name)[0]

    def fit_features(self, features: Any, y: np.ndarray) -> "QSARModel":
        y = np.asarray(y, dtype=np.float64)
        if n_rows(features) != len(y) or len(y) == 0:
            raise ValueError("need one label per training row and a non-empty training set")
        self.regressor = build_regressor(self.name, self.params, self.seed).fit(features, y)
        return self

    def predict_features(self, features: Any) -> np.ndarray:
        if self.regressor is None:
            raise RuntimeError(f"{self.name} is not fitted")
        out = np.asarray(self.regressor.predict(features), dtype=np.float64)
        if not np.isfinite(out).all():
            raise RuntimeError(f"{self.name} produced non-finite predictions")
        return out

    def fit(self, mols: Sequence, y: np.ndarray) -> "QSARModel":
        return self.fit_features(featurize(self.representation, mols), y)

    def predict(self, mols: Sequence) -> np.ndarray:
        return self.predict_features(featurize(self.representation, mols))
