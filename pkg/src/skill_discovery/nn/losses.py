"""
Gaussian likelihood head.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

SIGMA_FLOOR = 1e-6
HALF_LOG_2PI = 0.5 * np.log(2.0 * np.pi)


@dataclass(frozen=True)
class GaussianPrediction:
    """Per-channel mean and standard deviation."""

    mu: np.ndarray
    sigma: np.ndarray

    def __post_init__(self) -> None:
        if np.shape(self.mu) != np.shape(self.sigma):
            raise ValueError("mu and sigma must have the same shape")
        if np.any(np.asarray(self.sigma) <= 0.0):
            raise ValueError("sigma must be strictly positive")


def softplus_positive(raw: np.ndarray) -> np.ndarray:
    """log(1 + exp(raw)) + 1e-6, computed without overflow."""
    return np.logaddexp(0.0, raw) + SIGMA_FLOOR


def softplus_grad(raw: np.ndarray) -> np.ndarray:
    """Derivative of softplus_positive."""
    return expit(raw)


def gaussian_nll(
    pred: GaussianPrediction,
    target: np.ndarray,
) -> tuple[float, np.ndarray, np.ndarray]:
    """
    Negative log-likelihood of target under independent Gaussians.

    Summed over every entry, so a (m, d) batch gives the total over m targets.

    Returns:
        Tuple of (loss, dloss/dmu, dloss/dsigma)
    """
    mu = np.asarray(pred.mu, dtype=float)
    sigma = np.asarray(pred.sigma, dtype=float)
    target = np.asarray(target, dtype=float)
    if target.shape != mu.shape:
        raise ValueError(f"target shape {target.shape} does not match prediction {mu.shape}")
    if np.any(sigma <= 0.0):
        raise ValueError("sigma must be strictly positive")

    residual = target - mu
    var = sigma**2
    loss = float(np.sum(np.log(sigma) + residual**2 / (2.0 * var) + HALF_LOG_2PI))
    dmu = -residual / var
    dsigma = 1.0 / sigma - residual**2 / (var * sigma)
    return loss, dmu, dsigma
