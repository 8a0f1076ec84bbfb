"""
Minimal differentiable building blocks.
"""

from .losses import (
    GaussianPrediction,
    SIGMA_FLOOR,
    gaussian_nll,
    softplus_grad,
    softplus_positive,
)
from .mlp import Layer, MlpCache, MlpParams, init_mlp, mlp_backward, mlp_forward
from .optim import AdamState, adam_step, clip_global_norm, global_norm

__all__ = [
    "GaussianPrediction",
    "SIGMA_FLOOR",
    "gaussian_nll",
    "softplus_grad",
    "softplus_positive",
    "Layer",
    "MlpCache",
    "MlpParams",
    "init_mlp",
    "mlp_backward",
    "mlp_forward",
    "AdamState",
    "adam_step",
    "clip_global_norm",
    "global_norm",
]
