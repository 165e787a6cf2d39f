"""QSAR regressors: {ECFP, PDV, GIN} x {RF, kNN, MLP}."""

from acbench.models.registry import MODEL_NAMES, QSARModel, featurize, model_space
from acbench.models.tune import tune

__all__ = ["MODEL_NAMES", "QSARModel", "featurize", "model_space", "tune"]
