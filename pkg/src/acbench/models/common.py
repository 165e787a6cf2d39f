"""Shared pieces for the regressors: seeds, model inputs and the minibatch loop."""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from typing import Callable, Protocol, Sequence

import numpy as np
import scipy.sparse as sp

from acbench.chem.molecule import Molecule
from acbench.nn import tensor as T
from acbench.nn.layers import Module
from acbench.nn.optim import AdamW, StepDecay
from acbench.nn.tensor import Tensor


class TrainingDiverged(RuntimeError):
    """Loss became non-finite during training."""


def derive_seed(*keys) -> int:
    """Stable 63-bit seed from arbitrary keys (independent of PYTHONHASHSEED)."""
    payload = "\x1f".join(repr(k) for k in keys).encode("utf-8")
    return int.from_bytes(hashlib.blake2b(payload, digest_size=8).digest(), "little") >> 1


# -- inputs ------------------------------------------------------------------

@dataclass(frozen=True)
class MolGraph:
    """Atom-level raw attributes of one molecule (heavy atoms only)."""

    elements: tuple[str, ...]
    degrees: tuple[int, ...]
    charges: tuple[int, ...]
    aromatic: tuple[bool, ...]
    hydrogens: tuple[int, ...]
    edges: tuple[tuple[int, int], ...]

    @classmethod
    def from_molecule(cls, mol: Molecule) -> "MolGraph":
        keep = [i for i, a in enumerate(mol.atoms) if a.is_heavy]
        if not keep:
            raise ValueError("molecule without heavy atoms")
        pos = {old: new for new, old in enumerate(keep)}
        atoms = [mol.atoms[i] for i in keep]
        edges = tuple(sorted((pos[b.begin], pos[b.end]) for b in mol.bonds if b.begin in pos and b.end in pos))
        degree = [0] * len(keep)
        for u, v in edges:
            degree[u] += 1
            degree[v] += 1
        hydrogens = [a.implicit_h + sum(1 for w in mol.neighbors(i) if not mol.atoms[w].is_heavy)
                     for i, a in zip(keep, atoms)]
        return cls(tuple(a.element for a in atoms), tuple(degree), tuple(a.formal_charge for a in atoms),
                   tuple(a.aromatic for a in atoms), tuple(hydrogens), edges)

    @property
    def n_atoms(self) -> int:
        return len(self.elements)


@dataclass(frozen=True)
class GraphBatch:
    x: np.ndarray  # node features
    adjacency: sp.csr_matrix  # block-diagonal, symmetric
    segment: np.ndarray  # graph index per node
    n_graphs: int


class Inputs(Protocol):
    def __len__(self) -> int: ...
    def take(self, idx: np.ndarray): ...


@dataclass
class MatrixInputs:
    x: np.ndarray

    def __len__(self) -> int:
        return self.x.shape[0]

    def take(self, idx: np.ndarray) -> Tensor:
        return Tensor(self.x[idx])


@dataclass
class GraphInputs:
    """Per-molecule node features and adjacency, batched on demand."""

    features: list[np.ndarray]
    adjacency: list[sp.csr_matrix]

    def __len__(self) -> int:
        return len(self.features)

    def take(self, idx: np.ndarray) -> GraphBatch:
        idx = np.asarray(idx, dtype=np.int64)
        x = np.vstack([self.features[i] for i in idx])
        adj = sp.block_diag([self.adjacency[i] for i in idx], format="csr")
        seg = np.repeat(np.arange(len(idx)), [self.features[i].shape[0] for i in idx])
        return GraphBatch(x, adj, seg, len(idx))


# -- minibatch training ------------------------------------------------------

def minibatches(n: int, batch_size: int, rng: np.random.Generator) -> list[np.ndarray]:
    """Shuffled batches; a trailing batch of one row is merged into its predecessor (batchnorm)."""
    perm = rng.permutation(n)
    batches = [perm[s:s + batch_size] for s in range(0, n, batch_size)]
    if len(batches) > 1 and len(batches[-1]) < 2:
        last = batches.pop()
        batches[-1] = np.concatenate([batches[-1], last])
    return batches


@dataclass
class TrainSettings:
    lr: float = 1e-3
    weight_decay: float = 0.0
    lr_decay_factor: float = 1.0
    lr_decay_interval: int = 100
    batch_size: int = 64
    epochs: int = 500

    @classmethod
    def from_params(cls, params: dict) -> "TrainSettings":
        names = cls.__dataclass_fields__
        return cls(**{k: type(getattr(cls, k))(v) for k, v in params.items() if k in names})

    def optimizer(self, module: Module) -> AdamW:
        if self.epochs < 1 or self.batch_size < 2:
            raise ValueError("need epochs >= 1 and batch_size >= 2")
        return AdamW(module.parameters(), lr=self.lr, weight_decay=self.weight_decay,
                     schedule=StepDecay(self.lr_decay_factor, self.lr_decay_interval))


@dataclass
class LearningCurve:
    epoch_loss: list[float] = field(default_factory=list)


def check_finite(value: float, where: str) -> None:
    if not math.isfinite(value):
        raise TrainingDiverged(f"non-finite loss {value!r} at {where}")


def fit_regression(net: Callable, module: Module, inputs: Inputs, y: np.ndarray, settings: TrainSettings,
                   rng: np.random.Generator) -> LearningCurve:
    """Minimize minibatch MSE of ``net(batch, rng)`` against ``y`` with AdamW."""
    y = np.asarray(y, dtype=np.float64)
    if len(inputs) < 2:
        raise ValueError("need at least two training rows")
    opt = settings.optimizer(module)
    module.train()
    curve = LearningCurve()
    for epoch in range(settings.epochs):
        opt.set_epoch(epoch)
        total = 0.0
        for idx in minibatches(len(inputs), settings.batch_size, rng):
            pred = T.reshape(net(inputs.take(idx), rng), (len(idx),))
            loss = T.mse_loss(pred, y[idx])
            check_finite(loss.item(), f"epoch {epoch}")
            opt.zero_grad()
            loss.backward()
            opt.step()
            total += loss.item() * len(idx)
        curve.epoch_loss.append(total / len(inputs))
    module.eval()
    return curve


def predict_batched(net: Callable, module: Module, inputs: Inputs, batch_size: int = 512) -> np.ndarray:
    module.eval()
    out = []
    for s in range(0, len(inputs), batch_size):
        idx = np.arange(s, min(s + batch_size, len(inputs)))
        out.append(net(inputs.take(idx), None).data.reshape(-1))
    return np.concatenate(out) if out else np.zeros(0)


def as_molecules(items: Sequence) -> list[Molecule]:
    return [getattr(x, "mol", x) for x in items]
