"""Small float64 autodiff library with the layers the deep models need."""

from acbench.nn.layers import BatchNorm, FeedForward, Linear, MLPBlock, Module
from acbench.nn.optim import AdamW, StepDecay
from acbench.nn.tensor import Tensor

__all__ = ["AdamW", "BatchNorm", "FeedForward", "Linear", "MLPBlock", "Module", "StepDecay", "Tensor"]
