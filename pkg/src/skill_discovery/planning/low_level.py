"""
Low-level planning.

Turns a discrete skill (codebook index) into a concrete trajectory by
gradient descent on the skill vector: the decoded position at contact time
is pulled onto the observed object while the network weights stay fixed.
"""

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from ..config.types import KitchenConfig, PlannerConfig, Vec3
from ..dataset import Dataset, Demonstration, sample_environment, write_dataset
from ..exceptions import DataError, SkillDiscoveryError, TrainingError
from ..nn import mlp_backward, mlp_forward
from ..vqcnmp import Assignment, VqCnmpModel, decode_trajectory

logger = logging.getLogger(__name__)


class PlanRequest(BaseModel):
    """One skill to instantiate against one object pose."""

    k: int = Field(ge=0)
    object_pose: Vec3
    contact_time: float = Field(ge=0.0, le=1.0)
    tolerance: float = Field(default=0.02, gt=0.0)
    max_iters: int = Field(default=2000, ge=1)
    step_size: float = Field(default=0.05, gt=0.0)
    divergence_factor: float = Field(default=10.0, gt=1.0)
    trajectory_length: int = Field(default=150, ge=2)

    @classmethod
    def from_planner(
        cls, k: int, object_pose: Vec3, contact_time: float, planner: PlannerConfig
    ) -> "PlanRequest":
        return cls(
            k=k,
            object_pose=object_pose,
            contact_time=contact_time,
            tolerance=planner.tolerance,
            max_iters=planner.max_iters,
            step_size=planner.step_size,
            divergence_factor=planner.divergence_factor,
            trajectory_length=planner.trajectory_length,
        )


class PlanResult(BaseModel):
    """Outcome of one low-level optimization."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    k: int
    object_pose: Vec3
    contact_time: float
    tolerance: float
    z_star: np.ndarray
    iterations: int
    final_error: float
    times: np.ndarray
    trajectory: np.ndarray
    converged: bool
    diverged: bool = False
    error: Optional[str] = None

    @classmethod
    def failed(cls, k: int, object_pose: Vec3, contact_time: float, tolerance: float, error: str):
        return cls(
            k=k,
            object_pose=object_pose,
            contact_time=contact_time,
            tolerance=tolerance,
            z_star=np.zeros(0),
            iterations=0,
            final_error=float("inf"),
            times=np.zeros(0),
            trajectory=np.zeros((0, 0)),
            converged=False,
            error=error,
        )

    def summary(self) -> dict:
        return {
            "k": self.k,
            "object_pose": list(self.object_pose),
            "contact_time": self.contact_time,
            "iterations": self.iterations,
            "final_error": self.final_error if np.isfinite(self.final_error) else None,
            "converged": self.converged,
            "diverged": self.diverged,
            "error": self.error,
        }


def _xyz_affine(model: VqCnmpModel) -> tuple[np.ndarray, np.ndarray]:
    if model.norm_stats is None:
        return np.zeros(3), np.ones(3)
    return np.asarray(model.norm_stats.mean[:3]), np.asarray(model.norm_stats.scale[:3])


def _denormalize(model: VqCnmpModel, sm: np.ndarray) -> np.ndarray:
    return sm if model.norm_stats is None else model.norm_stats.invert(sm)


def plan_loss(
    model: VqCnmpModel,
    z: np.ndarray,
    t_c: float,
    object_pose: Sequence[float],
) -> tuple[float, np.ndarray]:
    """
    Mean squared xyz error (m^2) between the decoded contact point and the object.

    Returns:
        Tuple of (loss, gradient w.r.t. z); model parameters are not touched
    """
    if model.d < 3:
        raise DataError("planning needs at least three position channels")
    mean, scale = _xyz_affine(model)

    out, cache = mlp_forward(model.decoder, np.append(np.asarray(z, dtype=float), t_c))
    xyz = out[:3] * scale + mean
    residual = xyz - np.asarray(object_pose, dtype=float)
    loss = float(np.mean(residual**2))

    dout = np.zeros_like(out)
    dout[:3] = 2.0 * residual / 3.0 * scale
    _, dinput = mlp_backward(model.decoder, cache, dout)
    dz = dinput[: model.d_z]
    if not np.all(np.isfinite(dz)):
        raise TrainingError(f"non-finite planning gradient at t_c={t_c}")
    return loss, dz


def optimize_skill_vector(model: VqCnmpModel, req: PlanRequest) -> PlanResult:
    """
    Plain gradient descent on z starting from codebook vector k.

    Stops once the positional error drops below req.tolerance, after
    req.max_iters steps, or when the loss exceeds divergence_factor times
    its initial value.
    """
    if req.k >= model.K:
        raise DataError(f"skill index {req.k} is outside the codebook (K={model.K})")

    z = model.codebook.vectors[req.k].copy()
    loss, dz = plan_loss(model, z, req.contact_time, req.object_pose)
    initial = loss
    iterations = 0
    diverged = False

    while np.sqrt(3.0 * loss) >= req.tolerance and iterations < req.max_iters:
        z = z - req.step_size * dz
        iterations += 1
        loss, dz = plan_loss(model, z, req.contact_time, req.object_pose)
        if loss > req.divergence_factor * initial:
            diverged = True
            break

    final_error = float(np.sqrt(3.0 * loss))
    times = np.linspace(0.0, 1.0, req.trajectory_length)
    mu, _ = decode_trajectory(model, z, times)

    if diverged:
        logger.warning("planning for k=%d diverged after %d iterations", req.k, iterations)
    return PlanResult(
        k=req.k,
        object_pose=req.object_pose,
        contact_time=req.contact_time,
        tolerance=req.tolerance,
        z_star=z,
        iterations=iterations,
        final_error=final_error,
        times=times,
        trajectory=_denormalize(model, mu),
        converged=final_error < req.tolerance,
        diverged=diverged,
    )


def execute_plan(
    model: VqCnmpModel,
    high_plan: Sequence[int],
    object_poses: dict[int, Vec3],
    contact_times: dict[int, float],
    key_map: dict[int, int],
    planner: Optional[PlannerConfig] = None,
) -> list[PlanResult]:
    """
    Instantiate every step of a high-level plan independently.

    Args:
        model: Trained model (read only)
        high_plan: Action keys in execution order
        object_poses: Action key -> object pose for that step
        contact_times: Codebook index -> contact time
        key_map: Action key -> codebook index
        planner: Optimizer settings

    A failing step yields a PlanResult with error set; later steps still run.
    """
    planner = planner or PlannerConfig()
    results = []
    for key in high_plan:
        k = key_map.get(key, -1)
        pose = object_poses.get(key, (0.0, 0.0, 0.0))
        t_c = contact_times.get(k, 0.0)
        try:
            if key not in key_map:
                raise DataError(f"action {key} has no skill vector")
            if key not in object_poses:
                raise DataError(f"no object pose for action {key}")
            if k not in contact_times:
                raise DataError(f"no contact time for skill vector {k}")
            req = PlanRequest.from_planner(k, pose, t_c, planner)
            results.append(optimize_skill_vector(model, req))
        except SkillDiscoveryError as e:
            logger.error("plan step for action %d failed: %s", key, e)
            results.append(PlanResult.failed(k, pose, t_c, planner.tolerance, str(e)))
    return results


# ---------------------------------------------------------------------------
# Scoring
# ---------------------------------------------------------------------------


@dataclass
class SuccessChecker:
    """
    Demo-free pick and put-in-pan check on a denormalized trajectory.

    Picked: the end effector comes within tolerance of the object and the
    gripper closes within contact_window steps of the closest approach.
    Delivered: the first release after that grasp happens within tolerance
    of the sink.
    """

    sink: Vec3
    tolerance: float = 0.02
    contact_window: int = 5
    gripper_threshold: float = 0.5

    def score(self, trajectory: np.ndarray, object_pose: Sequence[float]) -> tuple[bool, bool]:
        trajectory = np.asarray(trajectory, dtype=float)
        if trajectory.ndim != 2 or trajectory.shape[0] < 2 or trajectory.shape[1] < 4:
            return False, False

        xyz = trajectory[:, :3]
        closed = trajectory[:, 3] > self.gripper_threshold
        distances = np.linalg.norm(xyz - np.asarray(object_pose, dtype=float), axis=1)
        nearest = int(np.argmin(distances))

        closings = np.flatnonzero(closed[1:] & ~closed[:-1]) + 1
        grasps = closings[np.abs(closings - nearest) <= self.contact_window]
        if distances[nearest] >= self.tolerance or grasps.size == 0:
            return False, False

        openings = np.flatnonzero(~closed[1:] & closed[:-1]) + 1
        openings = openings[openings > grasps[0]]
        if openings.size == 0:
            return True, False
        release = xyz[openings[0]]
        return True, bool(np.linalg.norm(release - np.asarray(self.sink)) < self.tolerance)


def score_execution(result: PlanResult, checker: SuccessChecker) -> tuple[bool, bool]:
    """(picked, delivered) for one planned step."""
    if result.error is not None:
        return False, False
    return checker.score(result.trajectory, result.object_pose)


# ---------------------------------------------------------------------------
# Evaluation helpers
# ---------------------------------------------------------------------------


def contact_times_by_index(dataset: Dataset, asg: Assignment) -> dict[int, float]:
    """Mean generator contact time of the demos assigned to each vector."""
    grouped: dict[int, list[float]] = {}
    for demo in dataset.demos:
        if demo.contact_time is not None and demo.id in asg:
            grouped.setdefault(asg[demo.id], []).append(demo.contact_time)
    return {k: float(np.mean(times)) for k, times in sorted(grouped.items())}


class SkillLowLevelStats(BaseModel):
    """Single-task planning results for one skill."""

    skill: str
    k: Optional[int]
    trials: int
    converged: int = 0
    picked: int = 0
    delivered: int = 0
    iterations: list[int] = []

    @property
    def convergence_rate(self) -> float:
        return self.converged / self.trials if self.trials else 0.0

    @property
    def pick_rate(self) -> float:
        return self.picked / self.trials if self.trials else 0.0

    @property
    def delivered_rate(self) -> float:
        return self.delivered / self.trials if self.trials else 0.0

    @property
    def median_iterations(self) -> float:
        return float(np.median(self.iterations)) if self.iterations else float("nan")


class LowLevelReport(BaseModel):
    """Per-skill single-task planning results."""

    skills: list[SkillLowLevelStats]

    @property
    def convergence_rate(self) -> float:
        trials = sum(s.trials for s in self.skills)
        return sum(s.converged for s in self.skills) / trials if trials else 0.0

    @property
    def median_iterations(self) -> float:
        iterations = [i for s in self.skills for i in s.iterations]
        return float(np.median(iterations)) if iterations else float("nan")

    def rows(self) -> list[list[str]]:
        return [
            [
                s.skill,
                "-" if s.k is None else str(s.k),
                f"{s.convergence_rate:.0%}",
                f"{s.pick_rate:.0%}",
                f"{s.delivered_rate:.0%}",
                f"{s.median_iterations:g}",
            ]
            for s in self.skills
        ]


def evaluate_low_level(
    model: VqCnmpModel,
    kitchen: KitchenConfig,
    key_map: dict[int, int],
    contact_times: dict[int, float],
    trials: int,
    seed: int = 0,
    planner: Optional[PlannerConfig] = None,
) -> LowLevelReport:
    """
    Plan every skill against `trials` random in-region object placements.

    The placements depend only on (kitchen, trials, seed), so two models
    evaluated with the same arguments see identical environments.
    """
    planner = planner or PlannerConfig()
    rng = np.random.default_rng(seed)
    environments = [sample_environment(kitchen, rng) for _ in range(trials)]

    report = []
    for skill in kitchen.skills:
        k = key_map.get(skill.action_key)
        stats = SkillLowLevelStats(skill=skill.name, k=k, trials=trials)
        if k is None:
            logger.warning("no skill vector for %s; counting all trials as failures", skill.name)
            report.append(stats)
            continue
        checker = SuccessChecker(
            sink=skill.sink, tolerance=planner.tolerance, contact_window=planner.contact_window
        )
        t_c = contact_times.get(k, kitchen.contact_time)
        for env in environments:
            result = optimize_skill_vector(
                model, PlanRequest.from_planner(k, env[skill.name], t_c, planner)
            )
            picked, delivered = score_execution(result, checker)
            stats.converged += int(result.converged)
            stats.picked += int(picked)
            stats.delivered += int(delivered)
            stats.iterations.append(result.iterations)
        report.append(stats)
    return LowLevelReport(skills=report)


def export_plan(results: Sequence[PlanResult], directory: str | Path) -> list[Path]:
    """
    Write one trajectory file per planned step plus plan_summary.json.

    Trajectory files use the dataset format so they can be read back with
    read_dataset. Failed steps appear only in the summary.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for i, result in enumerate(results):
        if result.error is not None:
            continue
        demo = Demonstration(
            id=f"plan-{i:02d}-k{result.k}",
            times=result.times,
            sm=result.trajectory,
            contact_time=result.contact_time,
            object_pose=result.object_pose,
        )
        path = directory / f"plan-{i:02d}.jsonl"
        write_dataset(Dataset(demos=(demo,), d=demo.d), path)
        written.append(path)

    summary = [dict(step=i, **result.summary()) for i, result in enumerate(results)]
    summary_path = directory / "plan_summary.json"
    summary_path.write_text(json.dumps(summary, indent=2))
    written.append(summary_path)
    return written
