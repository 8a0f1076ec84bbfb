"""Tests for discovery module."""

import numpy as np
import pytest

from skill_discovery.config.types import KitchenConfig
from skill_discovery.discovery import (
    ClusterReport,
    SweepCell,
    SweepReport,
    assignment_histogram,
    cluster_report,
    codebook_sweep,
    estimate_skill_count,
    group_equivalent_skills,
    rank_models,
    rank_order,
    skill_key_map,
    skill_prototypes,
)
from skill_discovery.exceptions import DataError
from skill_discovery.vqcnmp import LossBreakdown, decode_trajectory


def labels_for(counts: dict[str, int]) -> dict[str, str]:
    """Demo id -> label, ids like 'drawer-001'."""
    return {f"{name}-{i:03d}": name for name, n in counts.items() for i in range(n)}


def flat_history(total: float, steps: int = 5) -> list[LossBreakdown]:
    return [
        LossBreakdown(step=i, k=0, nll=total, codebook_term=0.0, commitment_term=0.0, beta=0.25, total=total)
        for i in range(steps)
    ]


class TestClusterReport:
    """Tests for purity and perfect clustering."""

    def test_perfect_separation(self):
        """One vector per skill, no sharing."""
        labels = labels_for({"a": 3, "b": 3})
        asg = {i: (0 if label == "a" else 2) for i, label in labels.items()}
        report = cluster_report(asg, labels, K=3)
        assert report.accuracy == 1.0
        assert report.perfect
        assert report.vector_to_label == {0: "a", 2: "b"}
        assert report.per_skill_split == {"a": [0], "b": [2]}

    def test_split_skill_is_pure_but_not_perfect(self):
        """A skill spread over two vectors keeps purity 1."""
        labels = labels_for({"a": 4, "b": 2})
        asg = {i: (int(i.endswith(("0", "2"))) if labels[i] == "a" else 2) for i in labels}
        report = cluster_report(asg, labels, K=3)
        assert report.accuracy == 1.0
        assert not report.perfect
        assert report.per_skill_split["a"] == [0, 1]

    def test_merged_skills(self):
        """Two skills on one vector halve the purity."""
        labels = labels_for({"a": 2, "b": 2})
        asg = {i: 0 for i in labels}
        report = cluster_report(asg, labels, K=2)
        assert report.accuracy == pytest.approx(0.5)
        assert not report.perfect

    def test_merge_allowed_when_codebook_too_small(self):
        """With K below the skill count, cohesive skills are enough."""
        labels = labels_for({"a": 2, "b": 2, "c": 2})
        asg = {i: (0 if labels[i] in ("a", "b") else 1) for i in labels}
        report = cluster_report(asg, labels, K=2)
        assert report.perfect
        assert report.accuracy == pytest.approx(4 / 6)

    def test_relabeling_vectors_changes_nothing(self):
        """Purity and perfection do not depend on which index a cluster got."""
        labels = labels_for({"a": 5, "b": 3, "c": 4})
        rng = np.random.default_rng(2)
        asg = {i: int(rng.integers(4)) for i in labels}
        report = cluster_report(asg, labels, K=4)
        for perm in ([3, 2, 1, 0], [1, 0, 3, 2], [2, 3, 0, 1]):
            relabeled = cluster_report({i: perm[k] for i, k in asg.items()}, labels, K=4)
            assert relabeled.accuracy == pytest.approx(report.accuracy)
            assert relabeled.perfect == report.perfect
            assert {perm[k]: label for k, label in report.vector_to_label.items()} == relabeled.vector_to_label

    def test_majority_tie_alphabetical(self):
        """A tied vector takes the alphabetically first label."""
        labels = {"x1": "pour", "x2": "grasp"}
        report = cluster_report({"x1": 0, "x2": 0}, labels, K=1)
        assert report.vector_to_label == {0: "grasp"}
        assert report.vector_counts == {0: {"grasp": 1, "pour": 1}}

    def test_empty_assignment(self):
        """Nothing to report on."""
        with pytest.raises(DataError):
            cluster_report({}, {}, K=3)

    def test_unlabeled_demo(self):
        """Every assigned demo needs a label."""
        with pytest.raises(DataError, match="no label"):
            cluster_report({"a": 0, "b": 1}, {"a": "x", "b": None}, K=2)

    def test_histogram(self):
        """Demo counts per used vector, sorted by index."""
        assert assignment_histogram({"a": 3, "b": 1, "c": 3}) == {1: 1, 3: 2}


class TestRanking:
    """Tests for loss-based model selection."""

    def test_rank_order_ascending(self):
        """Lowest combined loss first."""
        histories = [flat_history(3.0), flat_history(1.0), flat_history(2.0)]
        assert rank_order(histories) == [1, 2, 0]

    def test_rank_order_stable(self):
        """Ties keep input order."""
        histories = [flat_history(1.0), flat_history(0.5), flat_history(1.0)]
        assert rank_order(histories) == [1, 0, 2]

    def test_rank_models_pairs(self, tiny_model):
        """Models travel with their histories."""
        other = tiny_model.copy()
        ranked = rank_models([(tiny_model, flat_history(2.0)), (other, flat_history(1.0))])
        assert ranked[0][0] is other

    def test_window_uses_trailing_steps(self):
        """Only the last window steps count."""
        improving = flat_history(10.0, 5) + flat_history(0.1, 5)
        steady = flat_history(1.0, 10)
        assert rank_order([steady, improving], window=5) == [1, 0]
        assert rank_order([steady, improving], window=10) == [0, 1]


class TestSkillKeyMap:
    """Tests for mapping catalog actions to vectors."""

    def test_majority_vectors(self):
        """Each skill maps to the vector that holds it."""
        kitchen = KitchenConfig()
        labels = labels_for({s.name: 2 for s in kitchen.skills})
        index = {s.name: i for i, s in enumerate(kitchen.skills)}
        asg = {i: 4 - index[label] for i, label in labels.items()}
        report = cluster_report(asg, labels, K=5)
        assert skill_key_map(report, kitchen) == {1: 4, 2: 3, 3: 2, 4: 1, 5: 0}

    def test_minority_skill_falls_back(self):
        """A skill that is nowhere the majority still gets its largest vector."""
        kitchen = KitchenConfig()
        labels = {"a1": "drawer", "a2": "drawer", "a3": "drawer", "b1": "stove_left"}
        report = cluster_report({"a1": 0, "a2": 0, "a3": 0, "b1": 0}, labels, K=5)
        mapping = skill_key_map(report, kitchen)
        assert mapping == {3: 0, 4: 0}

    def test_missing_skill_unmapped(self):
        """Skills without demos are left out."""
        kitchen = KitchenConfig()
        report = cluster_report({"a": 1}, {"a": "drawer"}, K=5)
        assert skill_key_map(report, kitchen) == {3: 1}


class TestPrototypes:
    """Tests for decoded prototypes and equivalent-vector grouping."""

    def test_prototypes_in_workspace_units(self, tiny_model):
        """Prototypes are denormalized decoder means of used vectors."""
        times = np.linspace(0.0, 1.0, 11)
        prototypes = skill_prototypes(tiny_model, times, [2, 0, 2])
        assert sorted(prototypes) == [0, 2]
        mu, _ = decode_trajectory(tiny_model, tiny_model.codebook.vectors[2], times)
        assert np.allclose(prototypes[2], tiny_model.norm_stats.invert(mu))

    def test_grouping(self):
        """Close paths group together, distant ones stay apart."""
        base = np.zeros((10, 4))
        shifted = base.copy()
        shifted[:, 0] += 0.005
        far = base.copy()
        far[:, 1] += 0.3
        groups = group_equivalent_skills({0: base, 1: far, 4: shifted}, tolerance=0.02)
        assert groups == [[0, 4], [1]]
        assert estimate_skill_count({0: base, 1: far, 4: shifted}) == 2

    def test_gripper_channel_ignored(self):
        """Only the xyz path decides equivalence."""
        a = np.zeros((10, 4))
        b = a.copy()
        b[:, 3] = 1.0
        assert group_equivalent_skills({0: a, 1: b}) == [[0, 1]]

    def test_degenerate_inputs(self):
        """Zero or one prototype."""
        assert group_equivalent_skills({}) == []
        assert group_equivalent_skills({3: np.zeros((5, 4))}) == [[3]]


class TestSweep:
    """Tests for codebook-size sweeps."""

    def _report(self, perfect: bool, accuracy: float) -> ClusterReport:
        return ClusterReport(
            accuracy=accuracy,
            perfect=perfect,
            K=3,
            n_demos=10,
            vector_to_label={},
            per_skill_split={},
            vector_counts={},
        )

    def test_report_rows(self):
        """Summary rows aggregate each K column."""
        report = SweepReport(
            cells={
                3: [
                    SweepCell(K=3, seed=0, combined_loss=1.0, vq_loss=0.2, report=self._report(True, 1.0)),
                    SweepCell(K=3, seed=1, combined_loss=2.0, vq_loss=0.1, report=self._report(False, 0.6)),
                ]
            }
        )
        assert report.header() == ["", "K=3"]
        rows = {row[0]: row[1] for row in report.rows()}
        assert rows["perfect clustering"] == "1/2"
        assert rows["mean accuracy"] == "80.0%"
        assert rows["max accuracy"] == "100.0%"
        assert rows["min VQ loss"] == "0.1"

    def test_small_sweep(self, dataset, tiny_cfg):
        """One short model per size, each with a clustering report."""
        cfg = tiny_cfg.model_copy(update={"iterations": 5})
        report = codebook_sweep(dataset, [2, 3], batch=2, cfg=cfg)
        assert report.sizes == [2, 3]
        assert [c.seed for c in report.cells[3]] == [0, 1]
        assert all(c.report is not None and c.report.K == c.K for K in report.sizes for c in report.cells[K])

    def test_no_sizes(self, dataset, tiny_cfg):
        """An empty sweep is rejected."""
        with pytest.raises(DataError):
            codebook_sweep(dataset, [], batch=1, cfg=tiny_cfg)
