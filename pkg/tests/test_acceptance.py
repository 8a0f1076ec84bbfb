"""
Desk-scale runs of the whole pipeline.

Everything except the reproducibility checks is marked slow; run with
`pytest -m slow`. Expect tens of minutes on a laptop CPU.
"""

import numpy as np
import pytest

from skill_discovery.config.types import KitchenConfig, PlannerConfig, TrainingConfig
from skill_discovery.dataset import generate_synthetic_dataset, normalize_dataset, uneven_counts
from skill_discovery.discovery import (
    cluster_report,
    codebook_sweep,
    rank_order,
    skill_key_map,
    skill_prototypes,
)
from skill_discovery.planning.low_level import contact_times_by_index, evaluate_low_level
from skill_discovery.vqcnmp import assign_all, finetune, save_model, train

DESK_TRAINING = TrainingConfig(iterations=30000)


def desk_dataset(counts=30):
    kitchen = KitchenConfig(demos_per_skill=counts)
    return kitchen, normalize_dataset(generate_synthetic_dataset(kitchen))


class TestReproducibility:
    """Same config and seed, same bytes."""

    def test_dataset_and_checkpoint(self, tmp_path):
        kitchen = KitchenConfig(demos_per_skill=2, length=30, seed=4)
        cfg = TrainingConfig(iterations=25, hidden_sizes=[8], latent_dim=3, seed=4, loss_window=5)
        paths = []
        for run in ("a", "b"):
            ds = normalize_dataset(generate_synthetic_dataset(kitchen))
            model, _ = train(ds, cfg)
            path = tmp_path / f"{run}.jsonl"
            save_model(model, path)
            paths.append(path)
        assert paths[0].read_bytes() == paths[1].read_bytes()


@pytest.mark.slow
class TestDeskScaleDiscovery:
    """Clustering quality of a batch of ten models."""

    @pytest.fixture(scope="class")
    def batch(self):
        _, ds = desk_dataset()
        runs = [train(ds, DESK_TRAINING.model_copy(update={"seed": seed})) for seed in range(10)]
        reports = [cluster_report(assign_all(model, ds), ds.labels(), 5) for model, _ in runs]
        return runs, reports

    def test_purity(self, batch):
        """At least three models reach 95% purity."""
        _, reports = batch
        assert sum(r.accuracy >= 0.95 for r in reports) >= 3

    def test_lowest_loss_models(self, batch):
        """A perfectly clustered model is among the three with the lowest loss."""
        runs, reports = batch
        order = rank_order([history for _, history in runs], DESK_TRAINING.loss_window)
        assert any(reports[i].perfect for i in order[:3])

    def test_loss_falls_over_training(self, batch):
        """The trailing 1000 steps average below the first 1000."""
        runs, _ = batch
        for _, history in runs:
            totals = [b.total for b in history]
            assert np.mean(totals[-1000:]) < np.mean(totals[:1000])

    def test_prototypes_reach_their_source(self, batch):
        """At contact time a perfect model's prototypes sit in their source box, up to 2 sigma of noise."""
        runs, reports = batch
        kitchen, ds = desk_dataset()
        best = next(i for i, r in enumerate(reports) if r.perfect)
        model, _ = runs[best]
        contact = contact_times_by_index(ds, assign_all(model, ds))
        sources = {skill.name: skill for skill in kitchen.skills}
        margin = 2.0 * kitchen.noise_std
        for k, label in reports[best].vector_to_label.items():
            xyz = skill_prototypes(model, np.array([contact[k]]), [k])[k][0, :3]
            skill = sources[label]
            assert np.all(xyz >= np.asarray(skill.source_min) - margin), label
            assert np.all(xyz <= np.asarray(skill.source_max) + margin), label

    def test_uneven_mix(self, batch):
        """Unequal demonstration counts barely change the perfect count."""
        _, reports = batch
        _, ds = desk_dataset(uneven_counts(5, seed=0))
        uneven = codebook_sweep(ds, [5], 10, DESK_TRAINING)
        even_count = sum(r.perfect for r in reports)
        assert abs(uneven.perfect_count(5) - even_count) <= 2


@pytest.mark.slow
def test_codebook_size_trends():
    """More vectors lower the VQ loss and the purity; three vectors merge rather than split."""
    _, ds = desk_dataset()
    report = codebook_sweep(ds, [3, 5, 10, 20], 5, DESK_TRAINING, jobs=4)

    medians = [np.median([c.vq_loss for c in report.cells[K]]) for K in report.sizes]
    assert all(a >= b for a, b in zip(medians, medians[1:]))
    assert report.mean_accuracy(20) < report.mean_accuracy(5)
    assert report.perfect_count(3) >= report.perfect_count(10)


@pytest.mark.slow
def test_low_level_planning_after_finetuning():
    """Fine-tuned vectors converge within 2 cm and faster than the unsupervised ones."""
    kitchen, ds = desk_dataset()
    runs = [train(ds, DESK_TRAINING.model_copy(update={"seed": seed})) for seed in range(5)]
    phase_one = None
    for model, _ in runs:
        report = cluster_report(assign_all(model, ds), ds.labels(), 5)
        if report.perfect:
            phase_one = model
            break
    assert phase_one is not None, "no perfectly clustered model in five seeds"

    asg = assign_all(phase_one, ds)
    tuned = finetune(ds, asg, DESK_TRAINING.model_copy(update={"latent_dim": phase_one.d_z}))
    assert assign_all(tuned, ds) == asg
    key_map = skill_key_map(cluster_report(asg, ds.labels(), 5), kitchen)
    contact = contact_times_by_index(ds, asg)
    planner = PlannerConfig()

    tuned_report = evaluate_low_level(tuned, kitchen, key_map, contact, 20, seed=0, planner=planner)
    base_report = evaluate_low_level(phase_one, kitchen, key_map, contact, 20, seed=0, planner=planner)

    assert tuned_report.convergence_rate >= 0.8
    for skill in tuned_report.skills:
        assert skill.pick_rate >= skill.delivered_rate
    assert tuned_report.median_iterations < base_report.median_iterations
