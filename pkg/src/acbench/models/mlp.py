"""Feed-forward regression network on standardized fixed-length features."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from acbench.models.common import LearningCurve, MatrixInputs, TrainSettings, fit_regression, predict_batched
from acbench.nn.layers import FeedForward, Module
from acbench.nn.tensor import Tensor


@dataclass
class MLPRegressor:
    hidden_width: int = 128
    depth: int = 2
    dropout: float = 0.0
    settings: TrainSettings = field(default_factory=TrainSettings)
    seed: int = 0
    net: FeedForward | None = field(default=None, repr=False)
    mean: np.ndarray | None = field(default=None, repr=False)
    scale: np.ndarray | None = field(default=None, repr=False)
    curve: LearningCurve | None = field(default=None, repr=False)

    @property
    def module(self) -> Module:
        return self.net

    def encode(self, x: np.ndarray) -> MatrixInputs:
        return MatrixInputs((np.asarray(x, dtype=np.float64) - self.mean) / self.scale)

    def prepare(self, x: np.ndarray, rng: np.random.Generator) -> MatrixInputs:
        """Fit input scaling on ``x``, build a fresh network, return encoded inputs."""
        x = np.asarray(x, dtype=np.float64)
        self.mean = x.mean(axis=0)
        sd = x.std(axis=0)
        self.scale = np.where(sd > 0, sd, 1.0)
        self.net = FeedForward(x.shape[1], [int(self.hidden_width)] * int(self.depth), 1, self.dropout, rng)
        return self.encode(x)

    def forward(self, batch: Tensor, rng) -> Tensor:
        return self.net(batch, rng)

    def fit(self, x: np.ndarray, y: np.ndarray) -> "MLPRegressor":
        rng = np.random.default_rng(self.seed)
        inputs = self.prepare(x, rng)
        self.curve = fit_regression(self.forward, self.net, inputs, y, self.settings, rng)
        return self

    def predict(self, x: np.ndarray) -> np.ndarray:
        if self.net is None:
            raise RuntimeError("MLPRegressor is not fitted")
        return predict_batched(self.forward, self.net, self.encode(x))
