"""
Skill discovery evaluation.

Clustering metrics against ground-truth skill labels, lowest-loss model
selection, codebook-size sweeps and decoded skill prototypes.
"""

import logging
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from typing import Iterable, Optional, Sequence

import numpy as np
from pydantic import BaseModel
from scipy.cluster.hierarchy import fcluster, linkage
from scipy.spatial.distance import pdist
from sklearn.metrics.cluster import contingency_matrix

from .config.types import KitchenConfig, TrainingConfig
from .dataset import Dataset
from .exceptions import DataError, TrainingError
from .vqcnmp import (
    Assignment,
    LossBreakdown,
    VqCnmpModel,
    assign_all,
    combined_loss,
    decode_trajectory,
    train,
    vq_loss,
)

logger = logging.getLogger(__name__)


class ClusterReport(BaseModel):
    """How well codebook assignments reproduce the ground-truth skills."""

    accuracy: float
    perfect: bool
    K: int
    n_demos: int
    vector_to_label: dict[int, str]
    per_skill_split: dict[str, list[int]]
    vector_counts: dict[int, dict[str, int]]


def cluster_report(asg: Assignment, labels: dict[str, Optional[str]], K: int) -> ClusterReport:
    """
    Purity and perfect-clustering verdict of one assignment.

    Accuracy is purity: each used vector counts the demos of its majority
    label (ties go to the alphabetically first label). Perfect means every
    skill sits on a single vector and, when K is at least the number of
    skills, no vector holds two skills.

    Raises:
        DataError: If the assignment is empty or a demo has no label
    """
    if not asg:
        raise DataError("cannot report on an empty assignment")
    ids = sorted(asg)
    unlabeled = [i for i in ids if labels.get(i) is None]
    if unlabeled:
        raise DataError(f"{len(unlabeled)} assigned demos have no label, e.g. {unlabeled[0]}")

    y_true = np.array([labels[i] for i in ids])
    y_pred = np.array([asg[i] for i in ids])
    matrix = contingency_matrix(y_true, y_pred)
    skills = np.unique(y_true)
    vectors = np.unique(y_pred)

    accuracy = float(np.sum(np.amax(matrix, axis=0)) / np.sum(matrix))
    vector_to_label = {int(k): str(skills[np.argmax(matrix[:, j])]) for j, k in enumerate(vectors)}
    vector_counts = {
        int(k): {str(skills[i]): int(matrix[i, j]) for i in np.flatnonzero(matrix[:, j])}
        for j, k in enumerate(vectors)
    }
    per_skill_split = {
        str(skill): [int(vectors[j]) for j in np.flatnonzero(matrix[i])]
        for i, skill in enumerate(skills)
    }

    cohesive = all(len(split) == 1 for split in per_skill_split.values())
    if K >= len(skills):
        perfect = cohesive and len({split[0] for split in per_skill_split.values()}) == len(skills)
    else:
        perfect = cohesive

    return ClusterReport(
        accuracy=accuracy,
        perfect=perfect,
        K=K,
        n_demos=len(ids),
        vector_to_label=vector_to_label,
        per_skill_split=per_skill_split,
        vector_counts=vector_counts,
    )


def assignment_histogram(asg: Assignment) -> dict[int, int]:
    """Number of demos per used codebook index."""
    return dict(sorted(Counter(asg.values()).items()))


def rank_order(histories: Sequence[Sequence[LossBreakdown]], window: int = 1000) -> list[int]:
    """Indices of histories by ascending combined loss; ties keep input order."""
    losses = [combined_loss(history, window) for history in histories]
    return sorted(range(len(histories)), key=lambda i: losses[i])


def rank_models(
    batch: Sequence[tuple[VqCnmpModel, list[LossBreakdown]]],
    window: int = 1000,
) -> list[tuple[VqCnmpModel, list[LossBreakdown]]]:
    """Order (model, history) pairs by ascending combined loss (stable)."""
    return [batch[i] for i in rank_order([history for _, history in batch], window)]


def skill_key_map(report: ClusterReport, kitchen: KitchenConfig) -> dict[int, int]:
    """
    Catalog action key -> codebook index, via majority labels.

    Each skill maps to the vector holding most of its demos among the
    vectors it is the majority of (or simply the most of its demos when
    it is nowhere the majority).
    """
    mapping = {}
    for skill in kitchen.skills:
        holders = {
            k: counts[skill.name]
            for k, counts in report.vector_counts.items()
            if skill.name in counts
        }
        if not holders:
            continue
        owned = {k: c for k, c in holders.items() if report.vector_to_label[k] == skill.name}
        candidates = owned or holders
        mapping[skill.action_key] = max(sorted(candidates), key=lambda k: candidates[k])
    return mapping


# ---------------------------------------------------------------------------
# Prototypes
# ---------------------------------------------------------------------------


def skill_prototypes(
    model: VqCnmpModel,
    times: np.ndarray,
    used: Iterable[int],
) -> dict[int, np.ndarray]:
    """
    Decoded mean trajectory of every used codebook vector.

    Args:
        model: Trained model
        times: Normalized time grid
        used: Codebook indices used by at least one training demo

    Returns:
        Index -> (len(times), d) trajectory in workspace units
    """
    prototypes = {}
    for k in sorted(set(used)):
        mu, _ = decode_trajectory(model, model.codebook.vectors[k], times)
        prototypes[k] = mu if model.norm_stats is None else model.norm_stats.invert(mu)
    return prototypes


def group_equivalent_skills(
    prototypes: dict[int, np.ndarray],
    tolerance: float = 0.02,
) -> list[list[int]]:
    """
    Group vectors whose prototypes represent the same action.

    Two prototypes are linked when the RMS distance between their xyz
    paths is below tolerance (meters); groups are the connected components.
    """
    keys = sorted(prototypes)
    if len(keys) < 2:
        return [keys] if keys else []
    paths = np.array([prototypes[k][:, :3].ravel() for k in keys])
    points_per_path = paths.shape[1] / 3
    distances = pdist(paths) / np.sqrt(points_per_path)
    labels = fcluster(linkage(distances, method="single"), t=tolerance, criterion="distance")

    groups: dict[int, list[int]] = {}
    for k, label in zip(keys, labels):
        groups.setdefault(int(label), []).append(k)
    return sorted(groups.values())


def estimate_skill_count(prototypes: dict[int, np.ndarray], tolerance: float = 0.02) -> int:
    """Number of distinct actions among the used vectors."""
    return len(group_equivalent_skills(prototypes, tolerance))


# ---------------------------------------------------------------------------
# Codebook-size sweep
# ---------------------------------------------------------------------------


class SweepCell(BaseModel):
    """One trained model of a sweep."""

    K: int
    seed: int
    combined_loss: float
    vq_loss: float
    report: Optional[ClusterReport] = None


class SweepReport(BaseModel):
    """Sweep results per codebook size."""

    cells: dict[int, list[SweepCell]]

    @property
    def sizes(self) -> list[int]:
        return sorted(self.cells)

    def perfect_count(self, K: int) -> int:
        return sum(1 for c in self.cells[K] if c.report is not None and c.report.perfect)

    def accuracies(self, K: int) -> list[float]:
        return [c.report.accuracy for c in self.cells[K] if c.report is not None]

    def mean_accuracy(self, K: int) -> float:
        values = self.accuracies(K)
        return float(np.mean(values)) if values else float("nan")

    def max_accuracy(self, K: int) -> float:
        values = self.accuracies(K)
        return float(np.max(values)) if values else float("nan")

    def min_vq_loss(self, K: int) -> float:
        return float(min(c.vq_loss for c in self.cells[K]))

    def header(self) -> list[str]:
        return ["", *[f"K={K}" for K in self.sizes]]

    def rows(self) -> list[list[str]]:
        """Rows of the summary table: one column per codebook size."""
        batch = {K: len(self.cells[K]) for K in self.sizes}
        return [
            ["perfect clustering", *[f"{self.perfect_count(K)}/{batch[K]}" for K in self.sizes]],
            ["mean accuracy", *[f"{self.mean_accuracy(K):.1%}" for K in self.sizes]],
            ["max accuracy", *[f"{self.max_accuracy(K):.1%}" for K in self.sizes]],
            ["min VQ loss", *[f"{self.min_vq_loss(K):.4g}" for K in self.sizes]],
        ]


def _sweep_job(dataset: Dataset, cfg: TrainingConfig, K: int, seed: int) -> SweepCell:
    job_cfg = cfg.model_copy(update={"codebook_size": K, "seed": seed})
    try:
        model, history = train(dataset, job_cfg)
    except Exception as e:
        # Re-raised as a plain TrainingError so it crosses process boundaries
        raise TrainingError(f"sweep job K={K} seed={seed} failed: {e}") from None

    report = None
    if dataset.has_labels():
        report = cluster_report(assign_all(model, dataset), dataset.labels(), K)
    return SweepCell(
        K=K,
        seed=seed,
        combined_loss=combined_loss(history, cfg.loss_window),
        vq_loss=vq_loss(history, cfg.loss_window),
        report=report,
    )


def codebook_sweep(
    dataset: Dataset,
    sizes: Sequence[int],
    batch: int,
    cfg: TrainingConfig,
    jobs: int = 1,
) -> SweepReport:
    """
    Train `batch` models per codebook size, seeds cfg.seed .. cfg.seed + batch - 1.

    Raises:
        TrainingError: First failing job, tagged with its (K, seed)
    """
    if not sizes:
        raise DataError("sweep needs at least one codebook size")
    tasks = [(K, cfg.seed + i) for K in sizes for i in range(batch)]
    logger.info("sweeping K=%s with %d models each (%d jobs)", list(sizes), batch, jobs)

    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(_sweep_job, dataset, cfg, K, seed) for K, seed in tasks]
            results = [future.result() for future in futures]
    else:
        results = [_sweep_job(dataset, cfg, K, seed) for K, seed in tasks]

    cells: dict[int, list[SweepCell]] = {K: [] for K in sizes}
    for cell in results:
        cells[cell.K].append(cell)
    return SweepReport(cells=cells)
