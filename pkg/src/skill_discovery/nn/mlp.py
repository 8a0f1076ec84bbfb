"""
Fully connected networks with analytic reverse-mode gradients.

Inputs may be a single vector (in,) or a batch (n, in); outputs keep the
same leading shape.
"""

from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np

Activation = Literal["relu", "identity"]


@dataclass
class Layer:
    """One affine layer followed by an activation."""

    weight: np.ndarray  # (out, in)
    bias: np.ndarray  # (out,)
    activation: Activation = "relu"

    @property
    def in_dim(self) -> int:
        return int(self.weight.shape[1])

    @property
    def out_dim(self) -> int:
        return int(self.weight.shape[0])


@dataclass
class MlpParams:
    """An ordered stack of layers whose shapes chain."""

    layers: list[Layer]

    def __post_init__(self) -> None:
        if not self.layers:
            raise ValueError("an MLP needs at least one layer")
        for i, layer in enumerate(self.layers):
            if layer.weight.ndim != 2 or layer.bias.shape != (layer.out_dim,):
                raise ValueError(f"layer {i}: bias shape does not match weight rows")
            if layer.activation not in ("relu", "identity"):
                raise ValueError(f"layer {i}: unknown activation {layer.activation!r}")
            if i and layer.in_dim != self.layers[i - 1].out_dim:
                raise ValueError(
                    f"layer {i} expects {layer.in_dim} inputs, "
                    f"layer {i - 1} emits {self.layers[i - 1].out_dim}"
                )

    @property
    def in_dim(self) -> int:
        return self.layers[0].in_dim

    @property
    def out_dim(self) -> int:
        return self.layers[-1].out_dim

    @property
    def activations(self) -> list[Activation]:
        return [layer.activation for layer in self.layers]

    def arrays(self) -> list[np.ndarray]:
        """Parameters in declared order: weight, bias per layer."""
        out: list[np.ndarray] = []
        for layer in self.layers:
            out.extend((layer.weight, layer.bias))
        return out

    def with_arrays(self, arrays: Sequence[np.ndarray]) -> "MlpParams":
        """Same architecture, new parameter values (order as in arrays())."""
        if len(arrays) != 2 * len(self.layers):
            raise ValueError(f"expected {2 * len(self.layers)} arrays, got {len(arrays)}")
        layers = []
        for i, layer in enumerate(self.layers):
            weight = np.asarray(arrays[2 * i], dtype=float)
            bias = np.asarray(arrays[2 * i + 1], dtype=float)
            if weight.shape != layer.weight.shape or bias.shape != layer.bias.shape:
                raise ValueError(f"layer {i}: replacement arrays change the shape")
            layers.append(Layer(weight, bias, layer.activation))
        return MlpParams(layers)

    def copy(self) -> "MlpParams":
        return self.with_arrays([a.copy() for a in self.arrays()])

    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(a)) for a in self.arrays())


@dataclass
class MlpCache:
    """Per-layer inputs and pre-activations recorded by mlp_forward."""

    inputs: list[np.ndarray] = field(default_factory=list)
    pre_activations: list[np.ndarray] = field(default_factory=list)
    batched: bool = False


def init_mlp(
    sizes: Sequence[int],
    activations: Sequence[Activation],
    rng: np.random.Generator,
) -> MlpParams:
    """
    Initialize an MLP with zero biases.

    Relu layers draw weights He-uniform, identity layers Glorot-uniform.

    Args:
        sizes: Layer widths including input and output, e.g. [5, 128, 128, 16]
        activations: One activation per layer (len(sizes) - 1 entries)
        rng: Generator supplying the weights
    """
    if len(activations) != len(sizes) - 1:
        raise ValueError("need exactly one activation per layer")
    layers = []
    for fan_in, fan_out, activation in zip(sizes[:-1], sizes[1:], activations):
        if activation == "relu":
            limit = np.sqrt(6.0 / fan_in)
        else:
            limit = np.sqrt(6.0 / (fan_in + fan_out))
        weight = rng.uniform(-limit, limit, size=(fan_out, fan_in))
        layers.append(Layer(weight, np.zeros(fan_out), activation))
    return MlpParams(layers)


def mlp_forward(p: MlpParams, x: np.ndarray) -> tuple[np.ndarray, MlpCache]:
    """Apply the network; returns the output and a cache for mlp_backward."""
    x = np.asarray(x, dtype=float)
    batched = x.ndim == 2
    a = np.atleast_2d(x)
    if a.ndim != 2 or a.shape[1] != p.in_dim:
        raise ValueError(f"input has shape {x.shape}, network expects {p.in_dim} features")

    cache = MlpCache(batched=batched)
    for layer in p.layers:
        cache.inputs.append(a)
        z = a @ layer.weight.T + layer.bias
        cache.pre_activations.append(z)
        a = np.maximum(z, 0.0) if layer.activation == "relu" else z

    return (a if batched else a[0]), cache


def mlp_backward(
    p: MlpParams,
    cache: MlpCache,
    dy: np.ndarray,
) -> tuple[MlpParams, np.ndarray]:
    """
    Reverse-mode gradients of the cached forward pass.

    Returns:
        Tuple of (gradients shaped like p, gradient w.r.t. the input)
    """
    if len(cache.pre_activations) != len(p.layers):
        raise ValueError("cache does not come from this network")
    da = np.atleast_2d(np.asarray(dy, dtype=float))
    if da.shape != cache.pre_activations[-1].shape:
        raise ValueError(
            f"dy has shape {np.shape(dy)}, output has {cache.pre_activations[-1].shape}"
        )

    grads: list[Layer] = []
    for layer, a_prev, z in zip(
        reversed(p.layers), reversed(cache.inputs), reversed(cache.pre_activations)
    ):
        dz = da * (z > 0.0) if layer.activation == "relu" else da
        grads.append(Layer(dz.T @ a_prev, dz.sum(axis=0), layer.activation))
        da = dz @ layer.weight

    dx = da if cache.batched else da[0]
    return MlpParams(grads[::-1]), dx


def min_abs_preactivation(p: MlpParams, cache: MlpCache) -> float:
    """Smallest |z| over relu pre-activations (inf if there are none)."""
    values = [
        np.min(np.abs(z))
        for layer, z in zip(p.layers, cache.pre_activations)
        if layer.activation == "relu"
    ]
    return float(min(values)) if values else float("inf")
