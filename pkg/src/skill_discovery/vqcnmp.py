"""
Vector-quantized conditional neural movement primitives.

An encoder maps each observed (t, SM(t)) point to a latent vector; the mean
over the context is snapped to the nearest entry of a learned codebook and a
decoder predicts a Gaussian over SM at any query time from (z, t).

Training has two phases: unsupervised discovery, where the nearest codebook
vector is chosen every step, and self-supervised fine-tuning, where each
demonstration keeps the vector it was assigned in the first phase.
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from pydantic import BaseModel, ValidationError, computed_field

from .config.types import TrainingConfig
from .dataset import (
    Dataset,
    Demonstration,
    NormStats,
    TrajectoryPoint,
    normalize_dataset,
    sample_context,
)
from .exceptions import CheckpointError, DataError, NonFiniteLossError
from .nn import (
    AdamState,
    GaussianPrediction,
    Layer,
    MlpCache,
    MlpParams,
    adam_step,
    clip_global_norm,
    gaussian_nll,
    init_mlp,
    mlp_backward,
    mlp_forward,
    softplus_grad,
    softplus_positive,
)
from .serialization import iter_records, write_records

logger = logging.getLogger(__name__)

CHECKPOINT_VERSION = 1

# demo id -> codebook index
Assignment = dict[str, int]


@dataclass
class SkillCodebook:
    """K skill vectors of dimension d_z."""

    vectors: np.ndarray

    def __post_init__(self) -> None:
        self.vectors = np.asarray(self.vectors, dtype=float)
        if self.vectors.ndim != 2 or self.vectors.shape[0] < 1:
            raise ValueError("codebook must be a non-empty K x d_z matrix")
        if not np.all(np.isfinite(self.vectors)):
            raise ValueError("codebook contains non-finite values")

    @property
    def K(self) -> int:
        return int(self.vectors.shape[0])

    @property
    def d_z(self) -> int:
        return int(self.vectors.shape[1])


@dataclass
class VqCnmpModel:
    """Encoder, decoder and codebook plus the data normalization they were trained in."""

    encoder: MlpParams
    decoder: MlpParams
    codebook: SkillCodebook
    d: int
    d_z: int
    norm_stats: Optional[NormStats] = None
    version: int = CHECKPOINT_VERSION

    def __post_init__(self) -> None:
        if self.encoder.in_dim != self.d + 1 or self.encoder.out_dim != self.d_z:
            raise ValueError(f"encoder must map {self.d + 1} -> {self.d_z}")
        if self.decoder.in_dim != self.d_z + 1 or self.decoder.out_dim != 2 * self.d:
            raise ValueError(f"decoder must map {self.d_z + 1} -> {2 * self.d}")
        if self.codebook.d_z != self.d_z:
            raise ValueError(f"codebook vectors have {self.codebook.d_z} dims, need {self.d_z}")

    @property
    def K(self) -> int:
        return self.codebook.K

    def copy(self) -> "VqCnmpModel":
        return VqCnmpModel(
            encoder=self.encoder.copy(),
            decoder=self.decoder.copy(),
            codebook=SkillCodebook(self.codebook.vectors.copy()),
            d=self.d,
            d_z=self.d_z,
            norm_stats=self.norm_stats,
            version=self.version,
        )

    def named_arrays(self) -> list[tuple[str, np.ndarray]]:
        """All parameters in checkpoint order."""
        named = []
        for prefix, net in (("encoder", self.encoder), ("decoder", self.decoder)):
            for i, layer in enumerate(net.layers):
                named.append((f"{prefix}.{i}.weight", layer.weight))
                named.append((f"{prefix}.{i}.bias", layer.bias))
        named.append(("codebook", self.codebook.vectors))
        return named

    def same_parameters(self, other: "VqCnmpModel") -> bool:
        """Bit-exact parameter equality."""
        mine, theirs = self.named_arrays(), other.named_arrays()
        return len(mine) == len(theirs) and all(
            a_name == b_name and a.shape == b.shape and np.array_equal(a, b)
            for (a_name, a), (b_name, b) in zip(mine, theirs)
        )


class LossBreakdown(BaseModel):
    """Loss terms of one training step."""

    step: int = 0
    k: int
    nll: float
    codebook_term: float
    commitment_term: float
    beta: float
    total: float

    @computed_field  # type: ignore[prop-decorator]
    @property
    def vq_loss(self) -> float:
        return self.codebook_term + self.beta * self.commitment_term


def init_model(
    d: int,
    cfg: TrainingConfig,
    norm_stats: Optional[NormStats] = None,
) -> VqCnmpModel:
    """A freshly initialized model; weights depend only on (d, cfg)."""
    rng = np.random.default_rng([cfg.seed, 0])
    hidden = list(cfg.hidden_sizes)
    activations = ["relu"] * len(hidden) + ["identity"]
    encoder = init_mlp([d + 1, *hidden, cfg.latent_dim], activations, rng)
    decoder = init_mlp([cfg.latent_dim + 1, *hidden, 2 * d], activations, rng)
    codebook = SkillCodebook(rng.uniform(-0.1, 0.1, size=(cfg.codebook_size, cfg.latent_dim)))
    return VqCnmpModel(
        encoder=encoder,
        decoder=decoder,
        codebook=codebook,
        d=d,
        d_z=cfg.latent_dim,
        norm_stats=norm_stats,
    )


# ---------------------------------------------------------------------------
# Forward operations
# ---------------------------------------------------------------------------


def _points_matrix(points: Sequence[TrajectoryPoint]) -> np.ndarray:
    """(n, 1 + d) rows of [t, sm...], sorted by t."""
    rows = np.array([np.concatenate(([p.t], np.asarray(p.sm, dtype=float))) for p in points])
    return rows[np.argsort(rows[:, 0], kind="stable")]


def _encode(model: VqCnmpModel, context: Sequence[TrajectoryPoint]) -> tuple[np.ndarray, MlpCache]:
    if not context:
        raise DataError("context must contain at least one point")
    inputs = _points_matrix(context)
    if inputs.shape[1] != model.d + 1:
        raise DataError(f"context points have d={inputs.shape[1] - 1}, model has d={model.d}")
    per_point, cache = mlp_forward(model.encoder, inputs)
    return per_point.mean(axis=0), cache


def encode(model: VqCnmpModel, context: Sequence[TrajectoryPoint]) -> np.ndarray:
    """Mean of the per-point encodings; independent of context order."""
    z_e, _ = _encode(model, context)
    return z_e


def quantize(cb: SkillCodebook, z_e: np.ndarray) -> tuple[int, np.ndarray]:
    """Nearest codebook vector (lowest index on ties) and a copy of it."""
    if cb.K < 1:
        raise ValueError("empty codebook")
    distances = np.sum((cb.vectors - np.asarray(z_e, dtype=float)) ** 2, axis=1)
    k = int(np.argmin(distances))
    return k, cb.vectors[k].copy()


def _decode_batch(
    model: VqCnmpModel, z: np.ndarray, times: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray, MlpCache]:
    times = np.asarray(times, dtype=float)
    inputs = np.column_stack([np.tile(np.asarray(z, dtype=float), (times.size, 1)), times])
    out, cache = mlp_forward(model.decoder, inputs)
    raw = out[:, model.d :]
    return out[:, : model.d], softplus_positive(raw), raw, cache


def decode(model: VqCnmpModel, z: np.ndarray, t_target: float) -> GaussianPrediction:
    """Gaussian prediction of SM(t_target) under latent z."""
    if not 0.0 <= t_target <= 1.0:
        raise DataError(f"target time {t_target} is outside [0, 1]")
    mu, sigma, _, _ = _decode_batch(model, z, np.array([t_target]))
    return GaussianPrediction(mu=mu[0], sigma=sigma[0])


def decode_trajectory(
    model: VqCnmpModel, z: np.ndarray, times: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Means and standard deviations (T, d) over a time grid, in model space."""
    mu, sigma, _, _ = _decode_batch(model, z, times)
    return mu, sigma


# ---------------------------------------------------------------------------
# Losses and gradients
# ---------------------------------------------------------------------------


def _targets_arrays(targets: Sequence[TrajectoryPoint]) -> tuple[np.ndarray, np.ndarray]:
    if not targets:
        raise DataError("at least one target point is required")
    times = np.array([p.t for p in targets], dtype=float)
    values = np.array([np.asarray(p.sm, dtype=float) for p in targets])
    return times, values


def target_nll(model: VqCnmpModel, z: np.ndarray, targets: Sequence[TrajectoryPoint]) -> float:
    """NLL of the targets under latent z, averaged over targets."""
    nll, _, _ = _nll_and_latent_grad(model, z, targets)
    return nll


def _nll_and_latent_grad(
    model: VqCnmpModel, z: np.ndarray, targets: Sequence[TrajectoryPoint]
) -> tuple[float, np.ndarray, MlpParams]:
    times, values = _targets_arrays(targets)
    mu, sigma, raw, cache = _decode_batch(model, z, times)
    m = times.size

    loss, dmu, dsigma = gaussian_nll(GaussianPrediction(mu=mu, sigma=sigma), values)
    draw = dsigma * softplus_grad(raw)
    dout = np.hstack([dmu, draw]) / m

    decoder_grads, dinputs = mlp_backward(model.decoder, cache, dout)
    dz = dinputs[:, : model.d_z].sum(axis=0)
    return loss / m, dz, decoder_grads


def _encoder_backward(model: VqCnmpModel, cache: MlpCache, dz_e: np.ndarray) -> MlpParams:
    n = cache.inputs[0].shape[0]
    grads, _ = mlp_backward(model.encoder, cache, np.tile(dz_e / n, (n, 1)))
    return grads


def straight_through_gradients(
    model: VqCnmpModel,
    context: Sequence[TrajectoryPoint],
    targets: Sequence[TrajectoryPoint],
) -> tuple[float, MlpParams, MlpParams]:
    """
    NLL and its gradients when the decoder is fed z_e directly.

    This is the path training takes through the quantizer: the decoder's
    gradient at z_q is copied onto z_e.

    Returns:
        Tuple of (nll, encoder gradients, decoder gradients)
    """
    z_e, cache = _encode(model, context)
    nll, dz, decoder_grads = _nll_and_latent_grad(model, z_e, targets)
    return nll, _encoder_backward(model, cache, dz), decoder_grads


def _breakdown(step: int, k: int, nll: float, diff: np.ndarray, beta: float) -> LossBreakdown:
    sq = float(diff @ diff)
    return LossBreakdown(
        step=step,
        k=k,
        nll=nll,
        codebook_term=sq,
        commitment_term=sq,
        beta=beta,
        total=nll + sq + beta * sq,
    )


def evaluate_loss(
    model: VqCnmpModel,
    context: Sequence[TrajectoryPoint],
    targets: Sequence[TrajectoryPoint],
    cfg: TrainingConfig,
    k: Optional[int] = None,
) -> LossBreakdown:
    """Loss terms without touching the model; k forces the codebook index."""
    z_e = encode(model, context)
    if k is None:
        k, z_q = quantize(model.codebook, z_e)
    else:
        z_q = model.codebook.vectors[k]
    return _breakdown(0, k, target_nll(model, z_q, targets), z_e - z_q, cfg.beta)


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------


@dataclass
class TrainingState:
    """A model under training plus its optimizer state."""

    model: VqCnmpModel
    encoder_adam: AdamState
    decoder_adam: AdamState
    # One state per codebook row so only the selected vector moves
    codebook_adam: list[AdamState] = field(default_factory=list)
    step: int = 0

    @classmethod
    def fresh(cls, model: VqCnmpModel) -> "TrainingState":
        return cls(
            model=model,
            encoder_adam=AdamState.zeros_like(model.encoder.arrays()),
            decoder_adam=AdamState.zeros_like(model.decoder.arrays()),
            codebook_adam=[AdamState.zeros_like([row]) for row in model.codebook.vectors],
        )


def _assigned_index(model: VqCnmpModel, demo: Demonstration, assignment: Optional[Assignment]) -> int:
    if assignment is None or demo.id not in assignment:
        raise DataError(f"demonstration {demo.id} has no frozen assignment")
    k = assignment[demo.id]
    if not 0 <= k < model.K:
        raise DataError(f"demonstration {demo.id} is assigned to {k}, codebook has {model.K}")
    return k


def training_step(
    state: TrainingState,
    demo: Demonstration,
    cfg: TrainingConfig,
    rng: np.random.Generator,
    assignment: Optional[Assignment] = None,
) -> LossBreakdown:
    """
    One optimization step on one demonstration, updating state in place.

    Raises:
        DataError: On dimension mismatch or a missing frozen assignment
        NonFiniteLossError: If any loss term is not finite
    """
    model = state.model
    if demo.d != model.d:
        raise DataError(f"demonstration {demo.id} has d={demo.d}, model has d={model.d}")

    context, targets = sample_context(
        demo, rng, min(cfg.n_max, demo.length), min(cfg.m_max, demo.length)
    )
    z_e, encoder_cache = _encode(model, context)

    if cfg.mode == "self_supervised":
        k = _assigned_index(model, demo, assignment)
        z_q = model.codebook.vectors[k].copy()
    else:
        k, z_q = quantize(model.codebook, z_e)

    nll, dz_q, decoder_grads = _nll_and_latent_grad(model, z_q, targets)
    diff = z_e - z_q
    breakdown = _breakdown(state.step, k, nll, diff, cfg.beta)

    terms = {
        "nll": breakdown.nll,
        "codebook": breakdown.codebook_term,
        "commitment": breakdown.commitment_term,
    }
    if not all(np.isfinite(v) for v in terms.values()):
        raise NonFiniteLossError(state.step, k, terms)

    # Straight-through: the decoder gradient at z_q flows to z_e unchanged
    dz_e = dz_q + 2.0 * cfg.beta * diff
    dv_k = -2.0 * diff
    encoder_grads = _encoder_backward(model, encoder_cache, dz_e)

    n_enc = len(model.encoder.layers) * 2
    n_dec = len(model.decoder.layers) * 2
    grads = clip_global_norm(
        encoder_grads.arrays() + decoder_grads.arrays() + [dv_k], cfg.clip_norm
    )
    adam = {"lr": cfg.lr, "beta1": cfg.beta1, "beta2": cfg.beta2, "eps": cfg.eps}

    arrays, state.encoder_adam = adam_step(
        model.encoder.arrays(), grads[:n_enc], state.encoder_adam, **adam
    )
    model.encoder = model.encoder.with_arrays(arrays)
    arrays, state.decoder_adam = adam_step(
        model.decoder.arrays(), grads[n_enc : n_enc + n_dec], state.decoder_adam, **adam
    )
    model.decoder = model.decoder.with_arrays(arrays)
    (row,), state.codebook_adam[k] = adam_step(
        [model.codebook.vectors[k]], [grads[-1]], state.codebook_adam[k], **adam
    )
    vectors = model.codebook.vectors.copy()
    vectors[k] = row
    model.codebook = SkillCodebook(vectors)

    state.step += 1
    return breakdown


def _require_normalized(dataset: Dataset) -> None:
    if not dataset.normalized:
        raise DataError("training requires a normalized dataset")
    if not dataset.demos:
        raise DataError("training requires at least one demonstration")


def train(
    dataset: Dataset,
    cfg: TrainingConfig,
    assignment: Optional[Assignment] = None,
) -> tuple[VqCnmpModel, list[LossBreakdown]]:
    """
    Train a fresh model for cfg.iterations steps, one random demo per step.

    Ground-truth labels are stripped before training starts.
    """
    _require_normalized(dataset)
    ds = dataset.without_labels()
    model = init_model(ds.d, cfg, norm_stats=ds.norm_stats)
    state = TrainingState.fresh(model)
    rng = np.random.default_rng([cfg.seed, 1])

    history: list[LossBreakdown] = []
    for step in range(cfg.iterations):
        demo = ds.demos[int(rng.integers(len(ds.demos)))]
        history.append(training_step(state, demo, cfg, rng, assignment))
        if (step + 1) % cfg.log_every == 0:
            last = history[-1]
            logger.info(
                "step %d k=%d nll=%.4f vq=%.4f total=%.4f (mean %.4f)",
                step + 1,
                last.k,
                last.nll,
                last.vq_loss,
                last.total,
                combined_loss(history, cfg.loss_window),
            )

    return state.model, history


def _model_space(model: VqCnmpModel, dataset: Dataset) -> Dataset:
    if dataset.normalized:
        return dataset
    if model.norm_stats is None:
        raise DataError("dataset is raw and the model carries no normalization statistics")
    return normalize_dataset(dataset, model.norm_stats)


def assign_all(model: VqCnmpModel, dataset: Dataset) -> Assignment:
    """Quantize every demonstration using its full trajectory as context."""
    ds = _model_space(model, dataset)
    return {demo.id: quantize(model.codebook, encode(model, demo.points))[0] for demo in ds.demos}


def finetune(dataset: Dataset, asg: Assignment, cfg: TrainingConfig) -> VqCnmpModel:
    """
    Train a fresh model with the codebook index of every demo frozen to asg.

    Raises:
        DataError: If asg misses a demonstration or uses an index >= K
    """
    _require_normalized(dataset)
    missing = [demo.id for demo in dataset.demos if demo.id not in asg]
    if missing:
        raise DataError(f"assignment is missing {len(missing)} demos, e.g. {missing[0]}")
    if asg and max(asg.values()) >= cfg.codebook_size:
        raise DataError(
            f"assignment uses index {max(asg.values())}, codebook size is {cfg.codebook_size}"
        )

    model, history = train(dataset, cfg.model_copy(update={"mode": "self_supervised"}), asg)
    if history:
        logger.info("fine-tuned %d steps, combined loss %.4f", len(history), combined_loss(history))
    return model


def combined_loss(history: Sequence[LossBreakdown], window: int = 1000) -> float:
    """Mean total loss over the trailing window (all steps if fewer)."""
    if not history:
        raise ValueError("empty training history")
    return float(np.mean([b.total for b in history[-window:]]))


def vq_loss(history: Sequence[LossBreakdown], window: int = 1000) -> float:
    """Mean codebook + beta * commitment loss over the trailing window."""
    if not history:
        raise ValueError("empty training history")
    return float(np.mean([b.vq_loss for b in history[-window:]]))


# ---------------------------------------------------------------------------
# Checkpoints
# ---------------------------------------------------------------------------


class _LayerSpec(BaseModel):
    shape: tuple[int, int]
    activation: str


class _CheckpointHeader(BaseModel):
    version: int
    kind: str
    d: int
    d_z: int
    K: int
    encoder: list[_LayerSpec]
    decoder: list[_LayerSpec]
    norm_stats: Optional[NormStats] = None
    probe: float


def _layer_specs(net: MlpParams) -> list[dict]:
    return [
        {"shape": list(layer.weight.shape), "activation": layer.activation}
        for layer in net.layers
    ]


def save_model(model: VqCnmpModel, path: str | Path) -> None:
    """Write a versioned checkpoint: header line then one line per array."""
    probe = float(model.encoder.layers[0].weight.flat[0])
    header = {
        "version": CHECKPOINT_VERSION,
        "kind": "vqcnmp",
        "d": model.d,
        "d_z": model.d_z,
        "K": model.K,
        "encoder": _layer_specs(model.encoder),
        "decoder": _layer_specs(model.decoder),
        "norm_stats": model.norm_stats.model_dump() if model.norm_stats else None,
        "probe": probe,
    }
    records = [header] + [
        {"name": name, "shape": list(array.shape), "values": array.ravel()}
        for name, array in model.named_arrays()
    ]
    write_records(path, records)
    logger.info("saved checkpoint %s (K=%d, probe encoder.0.weight[0,0]=%r)", path, model.K, probe)


def _empty_net(specs: list[_LayerSpec]) -> MlpParams:
    return MlpParams(
        [
            Layer(np.zeros(spec.shape), np.zeros(spec.shape[0]), spec.activation)  # type: ignore[arg-type]
            for spec in specs
        ]
    )


def load_model(path: str | Path) -> VqCnmpModel:
    """
    Read a checkpoint written by save_model.

    Raises:
        CheckpointError: Unknown version, shape mismatch or corrupted content
    """
    try:
        records = list(iter_records(path))
    except DataError as e:
        raise CheckpointError(f"cannot read checkpoint {path}: {e}") from e
    if not records:
        raise CheckpointError(f"empty checkpoint {path}")

    raw_header = records[0][1]
    version = raw_header.get("version") if isinstance(raw_header, dict) else None
    if version != CHECKPOINT_VERSION:
        raise CheckpointError(
            f"unsupported checkpoint version {version!r} (expected {CHECKPOINT_VERSION})"
        )
    try:
        header = _CheckpointHeader.model_validate(raw_header)
        skeleton = VqCnmpModel(
            encoder=_empty_net(header.encoder),
            decoder=_empty_net(header.decoder),
            codebook=SkillCodebook(np.zeros((header.K, header.d_z))),
            d=header.d,
            d_z=header.d_z,
        )
    except (ValidationError, ValueError) as e:
        raise CheckpointError(f"corrupted checkpoint header (version {version}): {e}") from e

    expected = skeleton.named_arrays()
    arrays = records[1:]
    if len(arrays) != len(expected):
        raise CheckpointError(f"checkpoint holds {len(arrays)} arrays, expected {len(expected)}")

    loaded: dict[str, np.ndarray] = {}
    for (line, record), (name, template) in zip(arrays, expected):
        if not isinstance(record, dict) or record.get("name") != name:
            raise CheckpointError(f"line {line}: expected array {name}")
        shape = tuple(record.get("shape", ()))
        if shape != template.shape:
            raise CheckpointError(
                f"line {line}: {name} has shape {shape}, header declares {template.shape}"
            )
        values = np.asarray(record.get("values", []), dtype=float)
        if values.size != template.size or not np.all(np.isfinite(values)):
            raise CheckpointError(f"line {line}: {name} values are truncated or non-finite")
        loaded[name] = values.reshape(shape)

    def net(prefix: str, specs: list[_LayerSpec]) -> MlpParams:
        return MlpParams(
            [
                Layer(loaded[f"{prefix}.{i}.weight"], loaded[f"{prefix}.{i}.bias"], spec.activation)  # type: ignore[arg-type]
                for i, spec in enumerate(specs)
            ]
        )

    model = VqCnmpModel(
        encoder=net("encoder", header.encoder),
        decoder=net("decoder", header.decoder),
        codebook=SkillCodebook(loaded["codebook"]),
        d=header.d,
        d_z=header.d_z,
        norm_stats=header.norm_stats,
        version=header.version,
    )
    if float(model.encoder.layers[0].weight.flat[0]) != header.probe:
        raise CheckpointError(f"probe weight mismatch in {path}")
    logger.debug("loaded checkpoint %s (probe %r)", path, header.probe)
    return model
