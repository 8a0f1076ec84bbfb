"""
Finite-difference verification of every analytic gradient path.

Each component draws random instances, computes analytic gradients and
compares them entrywise with central differences. Instances where a relu
pre-activation lies within KINK_MARGIN of zero are redrawn, since a
perturbation of size h could cross the kink there. Entries smaller than
ERROR_FLOOR in magnitude are compared on an absolute scale.
"""

import logging
from typing import Callable, Optional, TypeVar

import numpy as np
from pydantic import BaseModel, computed_field

from ..dataset import NormStats, TrajectoryPoint
from ..exceptions import GradientCheckError
from ..planning.low_level import plan_loss
from ..vqcnmp import SkillCodebook, VqCnmpModel, encode, straight_through_gradients, target_nll
from .losses import GaussianPrediction, gaussian_nll, softplus_grad, softplus_positive
from .mlp import MlpParams, init_mlp, min_abs_preactivation, mlp_backward, mlp_forward

logger = logging.getLogger(__name__)

T = TypeVar("T")

DEFAULT_STEP = 1e-5
DEFAULT_TOLERANCE = 1e-4
KINK_MARGIN = 1e-3
ERROR_FLOOR = 1e-4
MAX_NLL = 50.0
MAX_REDRAWS = 1000


def central_difference(f: Callable[[], float], array: np.ndarray, h: float = DEFAULT_STEP) -> np.ndarray:
    """Numerical gradient of f() w.r.t. array, perturbing it in place and restoring it."""
    grad = np.zeros_like(array, dtype=float)
    for idx in np.ndindex(array.shape):
        original = array[idx]
        array[idx] = original + h
        plus = f()
        array[idx] = original - h
        minus = f()
        array[idx] = original
        grad[idx] = (plus - minus) / (2.0 * h)
    return grad


def relative_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = ERROR_FLOOR) -> float:
    """max |a - b| / max(|a|, |b|, floor) over all entries."""
    a = np.asarray(analytic, dtype=float)
    b = np.asarray(numeric, dtype=float)
    denom = np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)
    return float(np.max(np.abs(a - b) / denom)) if a.size else 0.0


class ComponentResult(BaseModel):
    """Worst relative error of one gradient path over its instances."""

    name: str
    instances: int
    entries: int
    max_relative_error: float


class GradCheckReport(BaseModel):
    """All component results against one tolerance."""

    components: list[ComponentResult]
    tolerance: float = DEFAULT_TOLERANCE

    @computed_field
    @property
    def max_relative_error(self) -> float:
        return max((c.max_relative_error for c in self.components), default=0.0)

    @computed_field
    @property
    def passed(self) -> bool:
        return self.max_relative_error < self.tolerance


def _redraw(draw: Callable[[], T | None], component: str) -> T:
    """Call draw until it returns an instance."""
    for _ in range(MAX_REDRAWS):
        instance = draw()
        if instance is not None:
            return instance
    raise GradientCheckError(f"{component}: no kink-free instance in {MAX_REDRAWS} draws")


def _small_mlp(rng: np.random.Generator, sizes: list[int]) -> MlpParams:
    net = init_mlp(sizes, ["relu"] * (len(sizes) - 2) + ["identity"], rng)
    # Non-zero biases so every unit is exercised
    return net.with_arrays(
        [a if a.ndim == 2 else rng.uniform(-0.5, 0.5, a.shape) for a in net.arrays()]
    )


def _tiny_model(
    rng: np.random.Generator, d: int = 2, norm_stats: Optional[NormStats] = None
) -> VqCnmpModel:
    d_z, hidden = 3, [6, 5]
    return VqCnmpModel(
        encoder=_small_mlp(rng, [d + 1, *hidden, d_z]),
        decoder=_small_mlp(rng, [d_z + 1, *hidden, 2 * d]),
        codebook=SkillCodebook(np.zeros((1, d_z))),
        d=d,
        d_z=d_z,
        norm_stats=norm_stats,
    )


def check_mlp(rng: np.random.Generator, h: float = DEFAULT_STEP) -> tuple[float, int]:
    """Weights, biases and input of a random relu MLP under a random linear readout."""

    def draw():
        net = _small_mlp(rng, [3, 6, 5, 2])
        x = rng.normal(size=(4, 3))
        _, cache = mlp_forward(net, x)
        return (net, x) if min_abs_preactivation(net, cache) >= KINK_MARGIN else None

    net, x = _redraw(draw, "mlp")
    y, cache = mlp_forward(net, x)
    readout = rng.normal(size=y.shape)
    grads, dx = mlp_backward(net, cache, readout)

    def f() -> float:
        out, _ = mlp_forward(net, x)
        return float(np.sum(out * readout))

    worst = relative_error(dx, central_difference(f, x, h))
    for array, grad in zip(net.arrays(), grads.arrays()):
        worst = max(worst, relative_error(grad, central_difference(f, array, h)))
    return worst, sum(a.size for a in net.arrays()) + x.size


def check_gaussian_nll(rng: np.random.Generator, h: float = DEFAULT_STEP) -> tuple[float, int]:
    """Gradients w.r.t. mu and sigma."""
    mu = rng.normal(size=(3, 4))
    sigma = rng.uniform(0.5, 2.0, size=(3, 4))
    target = rng.normal(size=(3, 4))
    _, dmu, dsigma = gaussian_nll(GaussianPrediction(mu=mu, sigma=sigma), target)

    def f() -> float:
        return gaussian_nll(GaussianPrediction(mu=mu, sigma=sigma), target)[0]

    worst = max(
        relative_error(dmu, central_difference(f, mu, h)),
        relative_error(dsigma, central_difference(f, sigma, h)),
    )
    return worst, mu.size + sigma.size


def check_softplus(rng: np.random.Generator, h: float = DEFAULT_STEP) -> tuple[float, int]:
    """softplus_positive under a random linear readout."""
    raw = rng.normal(scale=3.0, size=8)
    readout = rng.normal(size=8)

    def f() -> float:
        return float(np.sum(readout * softplus_positive(raw)))

    return relative_error(readout * softplus_grad(raw), central_difference(f, raw, h)), raw.size


def check_straight_through(rng: np.random.Generator, h: float = DEFAULT_STEP) -> tuple[float, int]:
    """
    Encoder and decoder gradients of the NLL through the quantizer copy.

    With K=1, v_0 = 0 held fixed and the VQ terms dropped, feeding z_e to the
    decoder makes the straight-through estimator exact. Instances whose NLL
    exceeds MAX_NLL (a near-zero sigma) are redrawn as badly conditioned.
    """

    def draw():
        model = _tiny_model(rng)
        context = [TrajectoryPoint(t, rng.normal(size=2)) for t in rng.uniform(0, 1, 3)]
        targets = [TrajectoryPoint(t, rng.normal(size=2)) for t in rng.uniform(0, 1, 2)]
        encoded, encoder_cache = mlp_forward(
            model.encoder, np.array([np.append(p.t, p.sm) for p in context])
        )
        decoder_inputs = np.array([np.append(encoded.mean(axis=0), p.t) for p in targets])
        _, decoder_cache = mlp_forward(model.decoder, decoder_inputs)
        margin = min(
            min_abs_preactivation(model.encoder, encoder_cache),
            min_abs_preactivation(model.decoder, decoder_cache),
        )
        if margin < KINK_MARGIN or target_nll(model, encode(model, context), targets) > MAX_NLL:
            return None
        return model, context, targets

    model, context, targets = _redraw(draw, "straight_through")
    _, encoder_grads, decoder_grads = straight_through_gradients(model, context, targets)

    def f() -> float:
        return target_nll(model, encode(model, context), targets)

    worst = 0.0
    entries = 0
    for net, grads in ((model.encoder, encoder_grads), (model.decoder, decoder_grads)):
        for array, grad in zip(net.arrays(), grads.arrays()):
            worst = max(worst, relative_error(grad, central_difference(f, array, h)))
            entries += array.size
    return worst, entries


def check_plan_loss(rng: np.random.Generator, h: float = DEFAULT_STEP) -> tuple[float, int]:
    """Gradient of the contact-point loss w.r.t. the latent, weights frozen."""
    stats = NormStats(
        mean=(0.3, 0.0, 0.3, 0.5), scale=(0.1, 0.2, 0.15, 0.5), zero_variance=(False,) * 4
    )

    def draw():
        model = _tiny_model(rng, d=4, norm_stats=stats)
        z = rng.normal(size=model.d_z)
        t_c = float(rng.uniform(0.1, 0.9))
        _, cache = mlp_forward(model.decoder, np.append(z, t_c))
        return (model, z, t_c) if min_abs_preactivation(model.decoder, cache) >= KINK_MARGIN else None

    model, z, t_c = _redraw(draw, "plan_loss")
    pose = tuple(rng.uniform([0.2, -0.3, 0.1], [0.5, 0.3, 0.5]))
    _, dz = plan_loss(model, z, t_c, pose)

    def f() -> float:
        return plan_loss(model, z, t_c, pose)[0]

    return relative_error(dz, central_difference(f, z, h)), z.size


COMPONENTS: dict[str, Callable[[np.random.Generator, float], tuple[float, int]]] = {
    "mlp": check_mlp,
    "gaussian_nll": check_gaussian_nll,
    "softplus": check_softplus,
    "straight_through": check_straight_through,
    "plan_loss": check_plan_loss,
}


def run_gradient_suite(
    trials: int = 100,
    seed: int = 0,
    h: float = DEFAULT_STEP,
    tolerance: float = DEFAULT_TOLERANCE,
) -> GradCheckReport:
    """Run every component on `trials` random instances."""
    rng = np.random.default_rng(seed)
    results = []
    for name, check in COMPONENTS.items():
        worst = 0.0
        entries = 0
        for _ in range(trials):
            error, count = check(rng, h)
            worst = max(worst, error)
            entries += count
        logger.info("%s: max relative error %.3e over %d entries", name, worst, entries)
        results.append(
            ComponentResult(name=name, instances=trials, entries=entries, max_relative_error=worst)
        )
    return GradCheckReport(components=results, tolerance=tolerance)
