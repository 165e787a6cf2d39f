"""AdamW with decoupled weight decay and multiplicative step learning-rate decay."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from acbench.nn.tensor import Tensor


@dataclass
class StepDecay:
    """lr(epoch) = base_lr * factor ** (epoch // interval)."""

    factor: float = 1.0
    interval: int = 1

    def __post_init__(self):
        if not 0 < self.factor <= 1 or self.interval < 1:
            raise ValueError("decay factor must lie in (0, 1] and interval must be >= 1")

    def lr(self, base_lr: float, epoch: int) -> float:
        return base_lr * self.factor ** (epoch // self.interval)


@dataclass
class AdamW:
    params: list[Tensor]
    lr: float = 1e-3
    betas: tuple[float, float] = (0.9, 0.999)
    eps: float = 1e-8
    weight_decay: float = 0.0
    schedule: StepDecay = field(default_factory=StepDecay)
    step_count: int = 0
    base_lr: float = field(init=False)
    m: list[np.ndarray] = field(init=False)
    v: list[np.ndarray] = field(init=False)

    def __post_init__(self):
        self.base_lr = self.lr
        self.m = [np.zeros_like(p.data) for p in self.params]
        self.v = [np.zeros_like(p.data) for p in self.params]

    def set_epoch(self, epoch: int) -> None:
        self.lr = self.schedule.lr(self.base_lr, epoch)

    def zero_grad(self) -> None:
        for p in self.params:
            p.grad = None

    def step(self) -> None:
        self.step_count += 1
        b1, b2 = self.betas
        c1 = 1 - b1 ** self.step_count
        c2 = 1 - b2 ** self.step_count
        for p, m, v in zip(self.params, self.m, self.v):
            g = p.grad if p.grad is not None else np.zeros_like(p.data)
            if self.weight_decay:
                p.data = p.data * (1 - self.lr * self.weight_decay)
            m *= b1
            m += (1 - b1) * g
            v *= b2
            v += (1 - b2) * g * g
            p.data = p.data - self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)
