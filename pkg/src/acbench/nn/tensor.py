"""Reverse-mode automatic differentiation over float64 numpy arrays.

Every op returns a new :class:`Tensor` that remembers its parents and a
closure that pushes the output gradient back to them. :meth:`Tensor.backward`
walks the recorded graph once in reverse topological order.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward", "op")

    def __init__(self, data, requires_grad: bool = False, _parents: tuple = (), _backward: Callable | None = None,
                 op: str = ""):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self._parents = _parents
        self._backward = _backward
        self.op = op

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, op={self.op or 'leaf'}, requires_grad={self.requires_grad})"

    def item(self) -> float:
        return float(self.data)

    def zero_grad(self) -> None:
        self.grad = None

    def backward(self, grad: np.ndarray | None = None) -> None:
        if not self.requires_grad:
            raise RuntimeError("backward() on a tensor that was not produced by recorded ops")
        if grad is None:
            if self.data.size != 1:
                raise RuntimeError("backward() without a gradient needs a scalar output")
            grad = np.ones_like(self.data)
        order: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if p.requires_grad and id(p) not in seen:
                    stack.append((p, False))
        grads: dict[int, np.ndarray] = {id(self): np.asarray(grad, dtype=np.float64)}
        for node in reversed(order):
            g = grads.pop(id(node), None)
            if g is None:
                continue
            if node._backward is None:
                node.grad = g if node.grad is None else node.grad + g
                continue
            for parent, pg in zip(node._parents, node._backward(g)):
                if pg is None or not parent.requires_grad:
                    continue
                key = id(parent)
                grads[key] = grads[key] + pg if key in grads else pg

    # operator sugar
    def __add__(self, other): return add(self, other)
    def __radd__(self, other): return add(as_tensor(other), self)
    def __sub__(self, other): return sub(self, other)
    def __rsub__(self, other): return sub(as_tensor(other), self)
    def __mul__(self, other): return mul(self, other)
    def __rmul__(self, other): return mul(as_tensor(other), self)
    def __neg__(self): return mul(self, as_tensor(-1.0))
    def __matmul__(self, other): return matmul(self, other)


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _needs(*ts: Tensor) -> bool:
    return any(t.requires_grad for t in ts)


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for ax, n in enumerate(shape):
        if n == 1 and g.shape[ax] != 1:
            g = g.sum(axis=ax, keepdims=True)
    return g


def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out = a.data + b.data
    return Tensor(out, _needs(a, b), (a, b),
                  lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)), "add")


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    return Tensor(a.data - b.data, _needs(a, b), (a, b),
                  lambda g: (_unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)), "sub")


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    return Tensor(a.data * b.data, _needs(a, b), (a, b),
                  lambda g: (_unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)), "mul")


def square(a: Tensor) -> Tensor:
    return Tensor(a.data ** 2, a.requires_grad, (a,), lambda g: (2.0 * a.data * g,), "square")


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.data.ndim != 2 or b.data.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ValueError(f"matmul shape mismatch {a.shape} @ {b.shape}")
    return Tensor(a.data @ b.data, _needs(a, b), (a, b),
                  lambda g: (g @ b.data.T, a.data.T @ g), "matmul")


def relu(a: Tensor) -> Tensor:
    mask = a.data > 0
    return Tensor(np.where(mask, a.data, 0.0), a.requires_grad, (a,), lambda g: (g * mask,), "relu")


def sum_all(a: Tensor) -> Tensor:
    return Tensor(a.data.sum(), a.requires_grad, (a,), lambda g: (np.broadcast_to(g, a.shape).copy(),), "sum")


def mean_all(a: Tensor) -> Tensor:
    n = a.data.size
    return Tensor(a.data.mean(), a.requires_grad, (a,), lambda g: (np.full(a.shape, float(g) / n),), "mean")


def reshape(a: Tensor, shape: tuple[int, ...]) -> Tensor:
    return Tensor(a.data.reshape(shape), a.requires_grad, (a,), lambda g: (g.reshape(a.shape),), "reshape")


def take_rows(a: Tensor, idx: np.ndarray) -> Tensor:
    idx = np.asarray(idx, dtype=np.int64)

    def back(g):
        out = np.zeros_like(a.data)
        np.add.at(out, idx, g)
        return (out,)

    return Tensor(a.data[idx], a.requires_grad, (a,), back, "take_rows")


def dropout(a: Tensor, p: float, training: bool, rng: np.random.Generator | None) -> Tensor:
    """Inverted dropout; identity in eval mode or for p == 0."""
    if not training or p <= 0.0:
        return a
    if p >= 1.0:
        raise ValueError("dropout probability must be < 1")
    if rng is None:
        raise ValueError("training-mode dropout needs a random generator")
    mask = (rng.random(a.shape) >= p) / (1.0 - p)
    return Tensor(a.data * mask, a.requires_grad, (a,), lambda g: (g * mask,), "dropout")


def batchnorm_train(x: Tensor, gamma: Tensor, beta: Tensor, eps: float) -> tuple[Tensor, np.ndarray, np.ndarray]:
    """Batch-statistics normalization over rows; returns (output, batch mean, biased batch var)."""
    if x.data.ndim != 2:
        raise ValueError("batchnorm expects a 2-D input")
    n = x.shape[0]
    if n < 2:
        raise ValueError("batchnorm in training mode needs a batch of at least 2 rows")
    mu = x.data.mean(axis=0)
    var = x.data.var(axis=0)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = (x.data - mu) * inv
    out = xhat * gamma.data + beta.data

    def back(g):
        dgamma = (g * xhat).sum(axis=0)
        dbeta = g.sum(axis=0)
        dxhat = g * gamma.data
        dx = inv / n * (n * dxhat - dxhat.sum(axis=0) - xhat * (dxhat * xhat).sum(axis=0))
        return dx, dgamma, dbeta

    return Tensor(out, _needs(x, gamma, beta), (x, gamma, beta), back, "batchnorm"), mu, var


def batchnorm_eval(x: Tensor, gamma: Tensor, beta: Tensor, mean: np.ndarray, var: np.ndarray, eps: float) -> Tensor:
    inv = 1.0 / np.sqrt(var + eps)
    xhat = (x.data - mean) * inv
    out = xhat * gamma.data + beta.data
    return Tensor(out, _needs(x, gamma, beta), (x, gamma, beta),
                  lambda g: (g * gamma.data * inv, (g * xhat).sum(axis=0), g.sum(axis=0)), "batchnorm_eval")


def segment_max(x: Tensor, segment: np.ndarray, n_segments: int) -> Tensor:
    """Per-segment, per-column maximum of the rows of ``x``.

    Gradient goes to a single row per (segment, column): the lowest row
    index attaining the maximum.
    """
    segment = np.asarray(segment, dtype=np.int64)
    n, d = x.shape
    if segment.shape != (n,):
        raise ValueError("segment ids must have one entry per row")
    counts = np.bincount(segment, minlength=n_segments)
    if (counts[:n_segments] == 0).any():
        raise ValueError("every segment needs at least one row")
    out = np.full((n_segments, d), -np.inf)
    np.maximum.at(out, segment, x.data)
    # lowest row index hitting the max: scan rows in reverse so the first row wins
    arg = np.empty((n_segments, d), dtype=np.int64)
    hit = x.data == out[segment]
    for row in range(n - 1, -1, -1):
        cols = hit[row]
        arg[segment[row], cols] = row

    def back(g):
        dx = np.zeros_like(x.data)
        cols = np.broadcast_to(np.arange(d), (n_segments, d))
        np.add.at(dx, (arg, cols), g)
        return (dx,)

    return Tensor(out, x.requires_grad, (x,), back, "segment_max")


def sparse_matmul(a: sp.spmatrix, x: Tensor) -> Tensor:
    """``a @ x`` for a constant sparse matrix (used for neighbor summation)."""
    a = sp.csr_matrix(a)
    at = a.T.tocsr()
    return Tensor(np.asarray(a @ x.data), x.requires_grad, (x,), lambda g: (np.asarray(at @ g),), "spmm")


def mse_loss(pred: Tensor, target) -> Tensor:
    target = as_tensor(target)
    if pred.shape != target.shape:
        raise ValueError(f"mse_loss shape mismatch {pred.shape} vs {target.shape}")
    return mean_all(square(sub(pred, target)))


def weighted_sum(terms: Sequence[Tensor], weights: Sequence[float]) -> Tensor:
    if len(terms) != len(weights):
        raise ValueError("one weight per term")
    total = mul(terms[0], weights[0])
    for t, w in zip(terms[1:], weights[1:]):
        total = add(total, mul(t, w))
    return total
