"""Random forest regression (scikit-learn trees, seeded and single-threaded)."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from sklearn.ensemble import RandomForestRegressor


@dataclass
class ForestRegressor:
    n_trees: int = 100
    max_depth: int | None = None
    min_leaf: int = 1
    max_features: float | str = 1.0
    bootstrap: bool = True
    seed: int = 0
    model: RandomForestRegressor | None = field(default=None, repr=False)

    def fit(self, x: np.ndarray, y: np.ndarray) -> "ForestRegressor":
        if self.n_trees < 1:
            raise ValueError("n_trees must be >= 1")
        self.model = RandomForestRegressor(
            n_estimators=int(self.n_trees),
            max_depth=None if self.max_depth is None else int(self.max_depth),
            min_samples_leaf=int(self.min_leaf),
            max_features=self.max_features,
            bootstrap=self.bootstrap,
            random_state=self.seed % (2 ** 32),
            n_jobs=1,
        )
        self.model.fit(np.asarray(x, dtype=np.float64), np.asarray(y, dtype=np.float64))
        return self

    def predict(self, x: np.ndarray) -> np.ndarray:
        if self.model is None:
            raise RuntimeError("ForestRegressor is not fitted")
        return self.model.predict(np.asarray(x, dtype=np.float64))
