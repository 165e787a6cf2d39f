"""k-nearest-neighbour regression with per-representation metrics."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist

METRICS = ("tanimoto", "std_euclidean", "euclidean")


def tanimoto_distance(q: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Pairwise 1 - |q & x| / |q | x| for binary rows; two empty rows have distance 0."""
    q = (np.asarray(q) != 0).astype(np.float64)
    x = (np.asarray(x) != 0).astype(np.float64)
    inter = q @ x.T
    union = q.sum(axis=1)[:, None] + x.sum(axis=1)[None, :] - inter
    sim = np.divide(inter, union, out=np.ones_like(inter), where=union > 0)
    return 1.0 - sim


def euclidean_distance(q: np.ndarray, x: np.ndarray) -> np.ndarray:
    return cdist(np.asarray(q, dtype=np.float64), np.asarray(x, dtype=np.float64))


@dataclass
class KNNRegressor:
    k: int
    metric: str = "euclidean"
    x: np.ndarray | None = field(default=None, repr=False)
    y: np.ndarray | None = field(default=None, repr=False)
    scale: np.ndarray | None = field(default=None, repr=False)

    def fit(self, x: np.ndarray, y: np.ndarray) -> "KNNRegressor":
        if self.metric not in METRICS:
            raise ValueError(f"unknown metric {self.metric!r}")
        x = np.asarray(x)
        if x.shape[0] == 0:
            raise ValueError("empty training set")
        if not 1 <= self.k <= x.shape[0]:
            raise ValueError(f"k={self.k} outside 1..{x.shape[0]}")
        if self.metric == "std_euclidean":
            sd = x.std(axis=0)
            self.scale = np.where(sd > 0, sd, 1.0)
        self.x = x
        self.y = np.asarray(y, dtype=np.float64)
        return self

    def distances(self, q: np.ndarray) -> np.ndarray:
        if self.x is None:
            raise RuntimeError("KNNRegressor is not fitted")
        q = np.atleast_2d(q)
        if self.metric == "tanimoto":
            return tanimoto_distance(q, self.x)
        if self.metric == "std_euclidean":
            return euclidean_distance(q / self.scale, self.x / self.scale)
        return euclidean_distance(q, self.x)

    def predict(self, q: np.ndarray) -> np.ndarray:
        d = self.distances(q)
        # stable sort: equal distances keep training order, so the lowest index wins
        nearest = np.argsort(d, axis=1, kind="stable")[:, : self.k]
        return self.y[nearest].mean(axis=1)
