"""Graph isomorphism network: sum aggregation, two-layer update MLPs, max readout."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from acbench.models.common import (
    GraphBatch, GraphInputs, LearningCurve, MolGraph, TrainSettings, fit_regression, predict_batched,
)
from acbench.nn import tensor as T
from acbench.nn.layers import BatchNorm, FeedForward, Linear, Module
from acbench.nn.tensor import Tensor

HEADS = ("mlp_head", "linear_head")
MAX_DEGREE = 6
OTHER = "other"


@dataclass(frozen=True)
class AtomEncoder:
    """Element one-hot over a fixed vocabulary (+ other), degree one-hot, charge, aromatic, H count."""

    elements: tuple[str, ...]

    @classmethod
    def from_graphs(cls, graphs: Sequence[MolGraph]) -> "AtomEncoder":
        return cls(tuple(sorted({e for g in graphs for e in g.elements})))

    @property
    def width(self) -> int:
        return len(self.elements) + 1 + MAX_DEGREE + 1 + 3

    def encode(self, g: MolGraph) -> np.ndarray:
        n_el = len(self.elements) + 1
        col = {e: k for k, e in enumerate(self.elements)}
        x = np.zeros((g.n_atoms, self.width))
        for i in range(g.n_atoms):
            x[i, col.get(g.elements[i], n_el - 1)] = 1.0
            x[i, n_el + min(g.degrees[i], MAX_DEGREE)] = 1.0
            x[i, -3] = g.charges[i]
            x[i, -2] = float(g.aromatic[i])
            x[i, -1] = g.hydrogens[i]
        return x


def self_loop_adjacency(g: MolGraph) -> sp.csr_matrix:
    """I + A, so that one product gives h_v + sum of neighbor h."""
    n = g.n_atoms
    rows = [u for u, v in g.edges] + [v for u, v in g.edges] + list(range(n))
    cols = [v for u, v in g.edges] + [u for u, v in g.edges] + list(range(n))
    return sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))


class GINLayer(Module):
    def __init__(self, n_in: int, width: int, rng: np.random.Generator):
        self.lin1 = Linear(n_in, width, rng)
        self.bn1 = BatchNorm(width)
        self.lin2 = Linear(width, width, rng)
        self.bn2 = BatchNorm(width)

    def __call__(self, h: Tensor, adjacency: sp.csr_matrix) -> Tensor:
        agg = T.sparse_matmul(adjacency, h)
        z = T.relu(self.bn1(self.lin1(agg)))
        return T.relu(self.bn2(self.lin2(z)))


class GINNetwork(Module):
    def __init__(self, n_in: int, layers: int, width: int, head: str, head_width: int, head_depth: int,
                 dropout: float, rng: np.random.Generator):
        if layers < 1:
            raise ValueError("GIN needs at least one layer")
        if head not in HEADS:
            raise ValueError(f"unknown head {head!r}")
        self.layers = [GINLayer(n_in if k == 0 else width, width, rng) for k in range(layers)]
        self.dropout = float(dropout)
        self.head_kind = head
        self.head = (FeedForward(width, [head_width] * head_depth, 1, dropout, rng) if head == "mlp_head"
                     else Linear(width, 1, rng))

    def embed(self, batch: GraphBatch, rng: np.random.Generator | None = None) -> Tensor:
        h = Tensor(batch.x)
        for layer in self.layers:
            h = T.dropout(layer(h, batch.adjacency), self.dropout, self.training, rng)
        return T.segment_max(h, batch.segment, batch.n_graphs)

    def __call__(self, batch: GraphBatch, rng: np.random.Generator | None = None) -> Tensor:
        z = self.embed(batch, rng)
        return self.head(z, rng) if self.head_kind == "mlp_head" else self.head(z)


@dataclass
class GINRegressor:
    layers: int = 2
    width: int = 64
    head: str = "mlp_head"
    head_width: int = 64
    head_depth: int = 1
    dropout: float = 0.0
    settings: TrainSettings = field(default_factory=TrainSettings)
    seed: int = 0
    encoder: AtomEncoder | None = field(default=None, repr=False)
    net: GINNetwork | None = field(default=None, repr=False)
    curve: LearningCurve | None = field(default=None, repr=False)

    @property
    def module(self) -> Module:
        return self.net

    def encode(self, graphs: Sequence[MolGraph]) -> GraphInputs:
        return GraphInputs([self.encoder.encode(g) for g in graphs], [self_loop_adjacency(g) for g in graphs])

    def prepare(self, graphs: Sequence[MolGraph], rng: np.random.Generator) -> GraphInputs:
        self.encoder = AtomEncoder.from_graphs(graphs)
        self.net = GINNetwork(self.encoder.width, int(self.layers), int(self.width), self.head,
                              int(self.head_width), int(self.head_depth), self.dropout, rng)
        return self.encode(graphs)

    def forward(self, batch: GraphBatch, rng) -> Tensor:
        return self.net(batch, rng)

    def fit(self, graphs: Sequence[MolGraph], y: np.ndarray) -> "GINRegressor":
        rng = np.random.default_rng(self.seed)
        inputs = self.prepare(graphs, rng)
        self.curve = fit_regression(self.forward, self.net, inputs, y, self.settings, rng)
        return self

    def predict(self, graphs: Sequence[MolGraph]) -> np.ndarray:
        if self.net is None:
            raise RuntimeError("GINRegressor is not fitted")
        return predict_batched(self.forward, self.net, self.encode(graphs))

    def embed(self, graphs: Sequence[MolGraph]) -> np.ndarray:
        """Pooled eval-mode embeddings of a linear-head GIN, one row per graph."""
        if self.net is None:
            raise RuntimeError("GINRegressor is not fitted")
        if self.head != "linear_head":
            raise ValueError("frozen embeddings come from a GIN trained with linear_head")
        return predict_batched(lambda b, _: self.net.embed(b), self.net, self.encode(graphs))\
            .reshape(len(graphs), int(self.width))
