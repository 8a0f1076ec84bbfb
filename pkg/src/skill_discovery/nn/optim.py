"""
Adam and global-norm gradient clipping over lists of arrays.

Both are pure: inputs are never modified.
"""

from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass
class AdamState:
    """First/second moment buffers and the step counter."""

    m: list[np.ndarray]
    v: list[np.ndarray]
    step: int = 0

    @classmethod
    def zeros_like(cls, params: Sequence[np.ndarray]) -> "AdamState":
        return cls(
            m=[np.zeros_like(p, dtype=float) for p in params],
            v=[np.zeros_like(p, dtype=float) for p in params],
        )


def _check_shapes(params: Sequence[np.ndarray], grads: Sequence[np.ndarray]) -> None:
    if len(params) != len(grads):
        raise ValueError(f"{len(params)} parameter arrays but {len(grads)} gradients")
    for i, (p, g) in enumerate(zip(params, grads)):
        if np.shape(p) != np.shape(g):
            raise ValueError(f"array {i}: parameter {np.shape(p)} vs gradient {np.shape(g)}")


def adam_step(
    params: Sequence[np.ndarray],
    grads: Sequence[np.ndarray],
    state: AdamState,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> tuple[list[np.ndarray], AdamState]:
    """
    One bias-corrected Adam update.

    Returns:
        Tuple of (new parameter arrays, new state)
    """
    _check_shapes(params, grads)
    _check_shapes(params, state.m)

    t = state.step + 1
    new_params, new_m, new_v = [], [], []
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m = beta1 * m + (1.0 - beta1) * g
        v = beta2 * v + (1.0 - beta2) * g**2
        m_hat = m / (1.0 - beta1**t)
        v_hat = v / (1.0 - beta2**t)
        new_params.append(p - lr * m_hat / (np.sqrt(v_hat) + eps))
        new_m.append(m)
        new_v.append(v)

    return new_params, AdamState(m=new_m, v=new_v, step=t)


def global_norm(grads: Sequence[np.ndarray]) -> float:
    """L2 norm of all gradient entries taken together."""
    return float(np.sqrt(sum(float(np.sum(np.square(g))) for g in grads)))


def clip_global_norm(grads: Sequence[np.ndarray], max_norm: float) -> list[np.ndarray]:
    """Rescale all gradients jointly so their global norm is at most max_norm."""
    if max_norm <= 0.0:
        raise ValueError("max_norm must be positive")
    norm = global_norm(grads)
    if norm <= max_norm:
        return [np.array(g, dtype=float) for g in grads]
    scale = max_norm / norm
    return [np.asarray(g, dtype=float) * scale for g in grads]
