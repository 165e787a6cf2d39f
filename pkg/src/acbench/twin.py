"""Pair-based twin-network training for the gradient-trained regressors.

Both compounds of a pair go through one shared network in a single
forward pass. Training runs in two phases: random compound pairs from the
training set, then training MMPs weighted by their activity difference.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from acbench.models.common import check_finite
from acbench.models.gin import GINRegressor
from acbench.models.mlp import MLPRegressor
from acbench.nn import tensor as T
from acbench.nn.tensor import Tensor

log = logging.getLogger(__name__)

WEIGHTING_MODES = ("uniform", "proportional")


def twin_loss(a_s: float, a_t: float, f_s: float, f_t: float, w_pair: float = 1.0, w_diff: float = 0.0) -> float:
    """w_pair * [(a_s - f_s)^2 + (a_t - f_t)^2 + w_diff * ((a_s - a_t) - (f_s - f_t))^2]."""
    return w_pair * ((a_s - f_s) ** 2 + (a_t - f_t) ** 2 + w_diff * ((a_s - a_t) - (f_s - f_t)) ** 2)


def twin_batch_loss(f_s: Tensor, f_t: Tensor, a_s: np.ndarray, a_t: np.ndarray, w_pair: np.ndarray,
                    w_diff: float) -> Tensor:
    """Sum of per-pair twin losses divided by the 2P compounds in the batch.

    With w_diff = 0 and unit weights this is the plain MSE over the stacked
    compounds of the batch.
    """
    e_s = T.sub(f_s, a_s)
    e_t = T.sub(f_t, a_t)
    per_pair = T.add(T.square(e_s), T.square(e_t))
    if w_diff:
        per_pair = T.add(per_pair, T.mul(T.square(T.sub(e_s, e_t)), w_diff))
    return T.mul(T.sum_all(T.mul(per_pair, w_pair)), 1.0 / (2 * len(a_s)))


@dataclass
class TwinSchedule:
    phase1_epochs: int = 250
    phase2_epochs: int = 250
    w_diff: float = 1.0
    weighting: str = "proportional"

    def __post_init__(self):
        if self.phase1_epochs < 0 or self.phase2_epochs < 0 or self.phase1_epochs + self.phase2_epochs < 1:
            raise ValueError("phase lengths must be >= 0 with at least one epoch in total")
        if self.w_diff < 0:
            raise ValueError("w_diff must be >= 0")
        if self.weighting not in WEIGHTING_MODES:
            raise ValueError(f"weighting must be one of {WEIGHTING_MODES}")


@dataclass
class TwinCurve:
    phase: list[int] = field(default_factory=list)
    epoch_loss: list[float] = field(default_factory=list)


def random_matching(n: int, rng: np.random.Generator) -> np.ndarray:
    """Pairs covering every index once; an odd leftover is paired with a random other index."""
    if n < 2:
        raise ValueError("need at least two compounds to form pairs")
    perm = rng.permutation(n)
    pairs = perm[: n - n % 2].reshape(-1, 2)
    if n % 2:
        last = perm[-1]
        partner = perm[int(rng.integers(n - 1))]
        pairs = np.vstack([pairs, [last, partner]])
    return pairs


def mmp_weights(delta: np.ndarray, mode: str) -> np.ndarray:
    """Per-pair weights with mean 1; proportional mode scales with the activity difference."""
    delta = np.asarray(delta, dtype=np.float64)
    if mode == "uniform":
        return np.ones_like(delta)
    if (delta <= 0).any():
        raise ValueError("proportional weighting needs strictly positive activity differences")
    return delta / delta.mean()


def pair_batches(n_pairs: int, pairs_per_batch: int, rng: np.random.Generator) -> list[np.ndarray]:
    perm = rng.permutation(n_pairs)
    return [perm[s:s + pairs_per_batch] for s in range(0, n_pairs, pairs_per_batch)]


def twin_fit(model: MLPRegressor | GINRegressor, features, y: np.ndarray, mmp_pairs: Sequence[tuple[int, int, float]],
             schedule: TwinSchedule, seed: int | None = None,
             on_step: Callable[[int, object], None] | None = None) -> TwinCurve:
    """Train ``model`` in place with the twin loss.

    ``mmp_pairs`` are (row_1, row_2, delta_log) over the rows of ``features``
    (the training MMPs). Phase-2 pairs with zero activity difference would get
    zero weight and are dropped.
    """
    if not isinstance(model, (MLPRegressor, GINRegressor)):
        raise TypeError("twin training needs a gradient-trained model (MLP or GIN)")
    y = np.asarray(y, dtype=np.float64)
    rng = np.random.default_rng(model.seed if seed is None else seed)
    inputs = model.prepare(features, rng)
    settings = model.settings
    opt = settings.optimizer(model.module)
    pairs_per_batch = max(1, settings.batch_size // 2)

    mmp = np.array([(i, j) for i, j, d in mmp_pairs if d > 0], dtype=np.int64).reshape(-1, 2)
    delta = np.array([d for _, _, d in mmp_pairs if d > 0], dtype=np.float64)
    if len(mmp) < len(mmp_pairs):
        log.info("dropped %d training MMPs with zero activity difference", len(mmp_pairs) - len(mmp))
    phase2 = schedule.phase2_epochs
    if phase2 and len(mmp) == 0:
        log.warning("no training MMPs available; phase 2 skipped")
        phase2 = 0
    w_mmp = mmp_weights(delta, schedule.weighting) if len(mmp) else np.zeros(0)

    curve = TwinCurve()
    model.module.train()
    step = 0
    for epoch in range(schedule.phase1_epochs + phase2):
        opt.set_epoch(epoch)
        phase = 1 if epoch < schedule.phase1_epochs else 2
        if phase == 1:
            pairs = random_matching(len(inputs), rng)
            weights = np.ones(len(pairs))
        else:
            pairs, weights = mmp, w_mmp
        total, count = 0.0, 0
        for b in pair_batches(len(pairs), pairs_per_batch, rng):
            s, t = pairs[b, 0], pairs[b, 1]
            p = len(b)
            pred = T.reshape(model.forward(inputs.take(np.concatenate([s, t])), rng), (2 * p,))
            f_s = T.take_rows(pred, np.arange(p))
            f_t = T.take_rows(pred, np.arange(p, 2 * p))
            loss = twin_batch_loss(f_s, f_t, y[s], y[t], weights[b], schedule.w_diff)
            check_finite(loss.item(), f"twin epoch {epoch}")
            opt.zero_grad()
            loss.backward()
            opt.step()
            step += 1
            if on_step is not None:
                on_step(step, model)
            total += loss.item() * p
            count += p
        curve.phase.append(phase)
        curve.epoch_loss.append(total / max(count, 1))
    model.module.eval()
    return curve
