"""Random grid search with an inner molecule holdout."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np

from acbench.models.common import TrainingDiverged, derive_seed
from acbench.models.grids import sample_config
from acbench.models.registry import QSARModel, n_rows, take

log = logging.getLogger(__name__)

VALIDATION_FRACTION = 0.2


@dataclass
class TuningTrial:
    index: int
    params: dict
    val_mae: float
    error: str = ""


@dataclass
class TuningResult:
    best_params: dict
    best_index: int
    trials: list[TuningTrial] = field(default_factory=list)
    model: QSARModel | None = None


def holdout_split(n: int, seed: int, fraction: float = VALIDATION_FRACTION) -> tuple[np.ndarray, np.ndarray]:
    """(inner train, validation) row indices; validation gets round(fraction * n) rows, at least 1."""
    if n < 2:
        raise ValueError("need at least two molecules for an inner holdout")
    n_val = min(n - 1, max(1, int(round(fraction * n))))
    perm = np.random.default_rng(seed).permutation(n)
    return np.sort(perm[n_val:]), np.sort(perm[:n_val])


def tune(name: str, space: Mapping, features: Any, y: np.ndarray, budget: int, seed: int) -> TuningResult:
    """Sample ``budget`` configs, pick the lowest validation MAE (ties: first sampled), refit on all rows."""
    if budget < 1:
        raise ValueError("budget must be >= 1")
    y = np.asarray(y, dtype=np.float64)
    rng = np.random.default_rng(derive_seed(seed, "sample"))
    configs = [sample_config(space, rng) for _ in range(budget)]
    model_seed = derive_seed(seed, "model")
    trials: list[TuningTrial] = []
    if budget == 1:
        best = 0
    else:
        tr, va = holdout_split(n_rows(features), derive_seed(seed, "holdout"))
        f_tr, f_va = take(features, tr), take(features, va)
        for k, params in enumerate(configs):
            try:
                pred = QSARModel(name, params, model_seed).fit_features(f_tr, y[tr]).predict_features(f_va)
                trials.append(TuningTrial(k, params, float(np.mean(np.abs(pred - y[va])))))
            except TrainingDiverged as exc:
                log.warning("%s config %d diverged: %s", name, k, exc)
                trials.append(TuningTrial(k, params, math.inf, str(exc)))
        best = min(range(budget), key=lambda k: (trials[k].val_mae, k))
        if not math.isfinite(trials[best].val_mae):
            raise TrainingDiverged(f"{name}: every sampled config diverged")
    model = QSARModel(name, configs[best], model_seed).fit_features(features, y)
    return TuningResult(configs[best], best, trials, model)
