"""Parameterized layers built on :mod:`acbench.nn.tensor`."""

from __future__ import annotations

import math
from typing import Iterator

import numpy as np

from acbench.nn import tensor as T
from acbench.nn.tensor import Tensor

BN_MOMENTUM = 0.1
BN_EPS = 1e-5


def parameter(data: np.ndarray) -> Tensor:
    return Tensor(np.array(data, dtype=np.float64), requires_grad=True)


class Module:
    """Base class: named parameters, named buffers, train/eval switch."""

    training: bool = True

    def children(self) -> Iterator[tuple[str, "Module"]]:
        for name, value in vars(self).items():
            if isinstance(value, Module):
                yield name, value
            elif isinstance(value, list):
                for k, v in enumerate(value):
                    if isinstance(v, Module):
                        yield f"{name}.{k}", v

    def named_parameters(self, prefix: str = "") -> Iterator[tuple[str, Tensor]]:
        for name, value in vars(self).items():
            if isinstance(value, Tensor) and value.requires_grad:
                yield prefix + name, value
        for name, child in self.children():
            yield from child.named_parameters(f"{prefix}{name}.")

    def named_buffers(self, prefix: str = "") -> Iterator[tuple[str, np.ndarray]]:
        for name in getattr(self, "_buffers", ()):
            yield prefix + name, getattr(self, name)
        for name, child in self.children():
            yield from child.named_buffers(f"{prefix}{name}.")

    def parameters(self) -> list[Tensor]:
        return [p for _, p in self.named_parameters()]

    def train(self, mode: bool = True) -> "Module":
        self.training = mode
        for _, child in self.children():
            child.train(mode)
        return self

    def eval(self) -> "Module":
        return self.train(False)

    def zero_grad(self) -> None:
        for p in self.parameters():
            p.grad = None

    def state_dict(self) -> dict[str, np.ndarray]:
        out = {name: p.data.copy() for name, p in self.named_parameters()}
        out.update({name: b.copy() for name, b in self.named_buffers()})
        return out

    def load_state_dict(self, state: dict[str, np.ndarray]) -> None:
        params = dict(self.named_parameters())
        expected = set(params) | {n for n, _ in self.named_buffers()}
        if set(state) != expected:
            raise ValueError(f"state keys differ: missing {sorted(expected - set(state))}, "
                             f"unexpected {sorted(set(state) - expected)}")
        for name, p in params.items():
            value = np.asarray(state[name], dtype=np.float64)
            if value.shape != p.shape:
                raise ValueError(f"{name}: shape {value.shape} != {p.shape}")
            p.data = value.copy()
        for name, _ in list(self.named_buffers()):
            owner, attr = self._resolve(name)
            setattr(owner, attr, np.asarray(state[name], dtype=np.float64).copy())

    def _resolve(self, dotted: str) -> tuple["Module", str]:
        parts = dotted.split(".")
        obj = self
        k = 0
        while k < len(parts) - 1:
            nxt = getattr(obj, parts[k])
            if isinstance(nxt, list):
                k += 1
                nxt = nxt[int(parts[k])]
            obj = nxt
            k += 1
        return obj, parts[-1]


class Linear(Module):
    """y = x W + b with uniform(+-1/sqrt(fan_in)) initialization."""

    def __init__(self, n_in: int, n_out: int, rng: np.random.Generator):
        bound = 1.0 / math.sqrt(n_in)
        self.weight = parameter(rng.uniform(-bound, bound, size=(n_in, n_out)))
        self.bias = parameter(rng.uniform(-bound, bound, size=(n_out,)))

    def __call__(self, x: Tensor) -> Tensor:
        return T.add(T.matmul(x, self.weight), self.bias)


class BatchNorm(Module):
    _buffers = ("running_mean", "running_var")

    def __init__(self, n: int, momentum: float = BN_MOMENTUM, eps: float = BN_EPS):
        self.gamma = parameter(np.ones(n))
        self.beta = parameter(np.zeros(n))
        self.running_mean = np.zeros(n)
        self.running_var = np.ones(n)
        self.momentum = momentum
        self.eps = eps

    def __call__(self, x: Tensor) -> Tensor:
        if not self.training:
            return T.batchnorm_eval(x, self.gamma, self.beta, self.running_mean, self.running_var, self.eps)
        out, mu, var = T.batchnorm_train(x, self.gamma, self.beta, self.eps)
        n = x.shape[0]
        m = self.momentum
        # running variance tracks the unbiased estimate
        self.running_mean = (1 - m) * self.running_mean + m * mu
        self.running_var = (1 - m) * self.running_var + m * var * n / (n - 1)
        return out


class MLPBlock(Module):
    """Linear -> BatchNorm -> ReLU -> Dropout."""

    def __init__(self, n_in: int, n_out: int, dropout: float, rng: np.random.Generator):
        self.linear = Linear(n_in, n_out, rng)
        self.norm = BatchNorm(n_out)
        self.dropout = float(dropout)

    def __call__(self, x: Tensor, rng: np.random.Generator | None = None) -> Tensor:
        h = T.relu(self.norm(self.linear(x)))
        return T.dropout(h, self.dropout, self.training, rng)


class FeedForward(Module):
    """Stack of MLP blocks followed by a linear output layer."""

    def __init__(self, n_in: int, hidden: list[int], n_out: int, dropout: float, rng: np.random.Generator):
        sizes = [n_in, *hidden]
        self.blocks = [MLPBlock(a, b, dropout, rng) for a, b in zip(sizes[:-1], sizes[1:])]
        self.out = Linear(sizes[-1], n_out, rng)

    def __call__(self, x: Tensor, rng: np.random.Generator | None = None) -> Tensor:
        for block in self.blocks:
            x = block(x, rng)
        return self.out(x)
