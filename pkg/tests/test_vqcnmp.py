"""Tests for the vector-quantized model: forward pass, losses, training and checkpoints."""

import json
from unittest.mock import patch

import numpy as np
import pytest

from skill_discovery.dataset import Demonstration, TrajectoryPoint, sample_context
from skill_discovery.exceptions import CheckpointError, DataError, NonFiniteLossError
from skill_discovery.vqcnmp import (
    LossBreakdown,
    SkillCodebook,
    TrainingState,
    assign_all,
    combined_loss,
    decode,
    decode_trajectory,
    encode,
    evaluate_loss,
    finetune,
    init_model,
    load_model,
    quantize,
    save_model,
    target_nll,
    train,
    training_step,
    vq_loss,
)


def breakdowns(totals: list[float]) -> list[LossBreakdown]:
    return [
        LossBreakdown(step=i, k=0, nll=t, codebook_term=0.0, commitment_term=0.0, beta=0.25, total=t)
        for i, t in enumerate(totals)
    ]


def one_point_demo(dataset) -> Demonstration:
    demo = dataset.demos[0]
    return Demonstration(id="single", times=demo.times[10:11], sm=demo.sm[10:11])


class TestQuantize:
    """Tests for nearest-vector lookup."""

    def test_nearest_vector(self):
        """The closest row wins."""
        cb = SkillCodebook(np.array([[0.0, 0.0], [1.0, 1.0], [3.0, 3.0]]))
        k, v = quantize(cb, np.array([0.9, 1.2]))
        assert k == 1
        assert np.array_equal(v, [1.0, 1.0])

    def test_tie_goes_to_lowest_index(self):
        """Equidistant rows resolve to the first."""
        cb = SkillCodebook(np.array([[1.0, 0.0], [-1.0, 0.0]]))
        assert quantize(cb, np.zeros(2))[0] == 0

    def test_returns_copy(self):
        """Editing the result leaves the codebook alone."""
        cb = SkillCodebook(np.eye(2))
        _, v = quantize(cb, np.array([1.0, 0.0]))
        v[0] = 5.0
        assert cb.vectors[0, 0] == 1.0

    def test_matches_brute_force(self):
        """Agrees with an explicit search on random data."""
        rng = np.random.default_rng(0)
        for _ in range(50):
            cb = SkillCodebook(rng.normal(size=(7, 4)))
            z = rng.normal(size=4)
            expected = min(range(7), key=lambda i: np.linalg.norm(cb.vectors[i] - z))
            assert quantize(cb, z)[0] == expected

    def test_codebook_must_be_non_empty(self):
        """K >= 1."""
        with pytest.raises(ValueError):
            SkillCodebook(np.zeros((0, 3)))


class TestForward:
    """Tests for encode and decode."""

    def test_encode_ignores_context_order(self, tiny_model, dataset):
        """Shuffling the context does not change z_e."""
        points = dataset.demos[0].points[:6]
        assert np.array_equal(encode(tiny_model, points), encode(tiny_model, points[::-1]))

    def test_encode_shape(self, tiny_model, dataset):
        """z_e lives in the latent space."""
        assert encode(tiny_model, dataset.demos[0].points).shape == (4,)

    def test_empty_context(self, tiny_model):
        """At least one context point is needed."""
        with pytest.raises(DataError):
            encode(tiny_model, [])

    def test_context_dimension_checked(self, tiny_model):
        """Points must have the model's d."""
        with pytest.raises(DataError):
            encode(tiny_model, [TrajectoryPoint(0.5, np.zeros(3))])

    def test_decode_positive_sigma(self, tiny_model):
        """Predictions have d channels and strictly positive sigma."""
        pred = decode(tiny_model, np.zeros(4), 0.3)
        assert pred.mu.shape == (4,)
        assert np.all(pred.sigma > 0.0)

    def test_decode_time_range(self, tiny_model):
        """Query times must lie in [0, 1]."""
        with pytest.raises(DataError):
            decode(tiny_model, np.zeros(4), 1.5)

    def test_decode_trajectory_matches_pointwise(self, tiny_model):
        """Grid decoding agrees with single decodes."""
        times = np.linspace(0.0, 1.0, 7)
        mu, sigma = decode_trajectory(tiny_model, np.ones(4), times)
        assert mu.shape == sigma.shape == (7, 4)
        assert np.allclose(mu[3], decode(tiny_model, np.ones(4), times[3]).mu)

    def test_init_deterministic(self, dataset, tiny_cfg):
        """Initial weights depend only on the config."""
        a = init_model(4, tiny_cfg)
        b = init_model(4, tiny_cfg)
        c = init_model(4, tiny_cfg.model_copy(update={"seed": 1}))
        assert a.same_parameters(b)
        assert not a.same_parameters(c)


class TestLoss:
    """Tests for loss assembly."""

    def test_terms_add_up(self, tiny_model, tiny_cfg, dataset):
        """total = nll + ||z_e - z_q||^2 + beta ||z_e - z_q||^2."""
        context, targets = sample_context(dataset.demos[0], np.random.default_rng(0), 5, 5)
        loss = evaluate_loss(tiny_model, context, targets, tiny_cfg)
        z_e = encode(tiny_model, context)
        sq = float(np.sum((z_e - tiny_model.codebook.vectors[loss.k]) ** 2))
        assert loss.codebook_term == pytest.approx(sq)
        assert loss.commitment_term == pytest.approx(sq)
        assert loss.total == pytest.approx(loss.nll + sq + tiny_cfg.beta * sq)
        assert loss.vq_loss == pytest.approx((1 + tiny_cfg.beta) * sq)

    def test_forced_index(self, tiny_model, tiny_cfg, dataset):
        """An explicit k bypasses the nearest-vector choice."""
        context, targets = sample_context(dataset.demos[0], np.random.default_rng(0), 5, 5)
        assert evaluate_loss(tiny_model, context, targets, tiny_cfg, k=3).k == 3

    def test_nll_averaged_over_targets(self, tiny_model, dataset):
        """Repeating every target leaves the NLL unchanged."""
        targets = dataset.demos[0].points[:3]
        z = np.zeros(4)
        assert target_nll(tiny_model, z, targets * 2) == pytest.approx(target_nll(tiny_model, z, targets))

    def test_combined_loss_window(self):
        """Mean over the trailing window, or everything if shorter."""
        history = breakdowns([float(t) for t in range(1, 11)])
        assert combined_loss(history, window=3) == pytest.approx(9.0)
        assert combined_loss(history, window=100) == pytest.approx(5.5)
        assert vq_loss(history, window=3) == 0.0
        with pytest.raises(ValueError):
            combined_loss([])


class TestTraining:
    """Tests for optimization steps and training runs."""

    def test_zero_vq_terms_at_selected_vector(self, tiny_model, tiny_cfg, dataset):
        """With z_e equal to the chosen row only the NLL remains."""
        demo = one_point_demo(dataset)
        model = tiny_model.copy()
        vectors = model.codebook.vectors.copy()
        vectors[2] = encode(model, demo.points)
        model.codebook = SkillCodebook(vectors)
        result = training_step(TrainingState.fresh(model), demo, tiny_cfg, np.random.default_rng(0))
        assert result.k == 2
        assert result.codebook_term == 0.0
        assert result.commitment_term == 0.0
        assert result.total == result.nll

    def test_single_step_lowers_loss(self, dataset, tiny_cfg):
        """One small step on a one-point demo lowers its loss for most initializations."""
        demo = one_point_demo(dataset)
        cfg = tiny_cfg.model_copy(update={"lr": 1e-4})
        lowered = 0
        for seed in range(20):
            model = init_model(dataset.d, cfg.model_copy(update={"seed": seed}), dataset.norm_stats)
            before = evaluate_loss(model, demo.points, demo.points, cfg).total
            state = TrainingState.fresh(model)
            training_step(state, demo, cfg, np.random.default_rng(seed))
            after = evaluate_loss(state.model, demo.points, demo.points, cfg).total
            lowered += after < before
        # The straight-through encoder update ignores the quantizer, so a few seeds go up
        assert lowered >= 15

    def test_step_moves_only_selected_vector(self, tiny_model, tiny_cfg, dataset):
        """Only the chosen codebook row changes."""
        state = TrainingState.fresh(tiny_model.copy())
        before = state.model.codebook.vectors.copy()
        result = training_step(state, dataset.demos[0], tiny_cfg, np.random.default_rng(0))
        after = state.model.codebook.vectors
        others = [i for i in range(tiny_model.K) if i != result.k]
        assert np.array_equal(after[others], before[others])
        assert not np.array_equal(after[result.k], before[result.k])
        assert state.step == 1

    def test_self_supervised_skips_quantizer(self, tiny_model, tiny_cfg, dataset):
        """Frozen assignments are used and no nearest-vector search happens."""
        cfg = tiny_cfg.model_copy(update={"mode": "self_supervised"})
        demo = dataset.demos[0]
        state = TrainingState.fresh(tiny_model.copy())
        with patch("skill_discovery.vqcnmp.quantize") as mocked:
            result = training_step(state, demo, cfg, np.random.default_rng(0), {demo.id: 3})
        assert result.k == 3
        assert mocked.call_count == 0

    def test_self_supervised_requires_assignment(self, tiny_model, tiny_cfg, dataset):
        """Demos without a frozen index are an error."""
        cfg = tiny_cfg.model_copy(update={"mode": "self_supervised"})
        state = TrainingState.fresh(tiny_model.copy())
        with pytest.raises(DataError):
            training_step(state, dataset.demos[0], cfg, np.random.default_rng(0), {})

    def test_non_finite_loss(self, tiny_model, tiny_cfg, dataset):
        """A NaN weight surfaces as NonFiniteLossError."""
        model = tiny_model.copy()
        model.decoder.layers[-1].bias[:] = np.nan
        with pytest.raises(NonFiniteLossError) as excinfo:
            training_step(TrainingState.fresh(model), dataset.demos[0], tiny_cfg, np.random.default_rng(0))
        assert excinfo.value.step == 0
        assert "nll" in excinfo.value.terms

    def test_training_deterministic(self, dataset, tiny_cfg):
        """Same data and config give bit-identical models."""
        a, history_a = train(dataset, tiny_cfg)
        b, history_b = train(dataset, tiny_cfg)
        assert a.same_parameters(b)
        assert history_a == history_b
        assert len(history_a) == tiny_cfg.iterations

    def test_labels_never_influence_training(self, dataset, tiny_cfg):
        """Stripping labels beforehand changes nothing."""
        a, _ = train(dataset, tiny_cfg)
        b, _ = train(dataset.without_labels(), tiny_cfg)
        assert a.same_parameters(b)

    def test_raw_dataset_rejected(self, raw_dataset, tiny_cfg):
        """Training needs normalized data."""
        with pytest.raises(DataError, match="normalized"):
            train(raw_dataset, tiny_cfg)

    def test_loss_decreases(self, dataset, tiny_cfg):
        """Late steps have lower loss than early ones."""
        _, history = train(dataset, tiny_cfg.model_copy(update={"iterations": 400}))
        early = np.mean([b.total for b in history[:50]])
        late = np.mean([b.total for b in history[-50:]])
        assert late < early

    def test_model_carries_norm_stats(self, dataset, tiny_cfg):
        """Trained models remember the normalization they saw."""
        model, _ = train(dataset, tiny_cfg.model_copy(update={"iterations": 1}))
        assert model.norm_stats == dataset.norm_stats


class TestAssignment:
    """Tests for assignment and fine-tuning."""

    def test_assign_all(self, tiny_model, dataset):
        """Every demo gets an index inside the codebook."""
        asg = assign_all(tiny_model, dataset)
        assert set(asg) == {demo.id for demo in dataset.demos}
        assert all(0 <= k < tiny_model.K for k in asg.values())

    def test_raw_data_normalized_with_model_stats(self, tiny_model, raw_dataset, dataset):
        """Raw input is brought into model space first."""
        assert assign_all(tiny_model, raw_dataset) == assign_all(tiny_model, dataset)

    def test_finetune_missing_demo(self, dataset, tiny_cfg):
        """Every demo needs a frozen index."""
        asg = {demo.id: 0 for demo in dataset.demos[1:]}
        with pytest.raises(DataError, match="missing"):
            finetune(dataset, asg, tiny_cfg)

    def test_finetune_index_out_of_range(self, dataset, tiny_cfg):
        """Indices must fit the codebook."""
        asg = {demo.id: 5 for demo in dataset.demos}
        with pytest.raises(DataError):
            finetune(dataset, asg, tiny_cfg)

    def test_finetune_uses_frozen_indices(self, dataset, tiny_cfg):
        """Every step of fine-tuning uses the demo's frozen vector."""
        asg = {demo.id: i % 3 for i, demo in enumerate(dataset.demos)}
        cfg = tiny_cfg.model_copy(update={"iterations": 10})
        with patch("skill_discovery.vqcnmp.quantize") as mocked:
            model = finetune(dataset, asg, cfg)
        assert mocked.call_count == 0
        assert model.K == cfg.codebook_size


class TestCheckpoint:
    """Tests for saving and loading models."""

    def _lines(self, path) -> list[dict]:
        return [json.loads(line) for line in path.read_text().splitlines()]

    def _write(self, path, records: list[dict]) -> None:
        path.write_text("".join(json.dumps(r) + "\n" for r in records))

    def test_round_trip(self, tmp_path, tiny_model):
        """Loaded parameters are bit-identical."""
        path = tmp_path / "model.jsonl"
        save_model(tiny_model, path)
        loaded = load_model(path)
        assert loaded.same_parameters(tiny_model)
        assert loaded.norm_stats == tiny_model.norm_stats
        assert np.array_equal(decode(loaded, np.ones(4), 0.5).mu, decode(tiny_model, np.ones(4), 0.5).mu)

    def test_version_mismatch(self, tmp_path, tiny_model):
        """Other checkpoint versions are refused."""
        path = tmp_path / "model.jsonl"
        save_model(tiny_model, path)
        records = self._lines(path)
        records[0]["version"] = 2
        self._write(path, records)
        with pytest.raises(CheckpointError, match="unsupported checkpoint version"):
            load_model(path)

    def test_truncated(self, tmp_path, tiny_model):
        """Missing arrays are detected."""
        path = tmp_path / "model.jsonl"
        save_model(tiny_model, path)
        self._write(path, self._lines(path)[:-1])
        with pytest.raises(CheckpointError):
            load_model(path)

    def test_shape_mismatch(self, tmp_path, tiny_model):
        """Array shapes must match the header."""
        path = tmp_path / "model.jsonl"
        save_model(tiny_model, path)
        records = self._lines(path)
        records[1]["shape"] = [1, 1]
        self._write(path, records)
        with pytest.raises(CheckpointError, match="shape"):
            load_model(path)

    def test_probe_mismatch(self, tmp_path, tiny_model):
        """A flipped first weight fails the integrity probe."""
        path = tmp_path / "model.jsonl"
        save_model(tiny_model, path)
        records = self._lines(path)
        records[1]["values"][0] += 1.0
        self._write(path, records)
        with pytest.raises(CheckpointError, match="probe"):
            load_model(path)

    def test_garbage_file(self, tmp_path):
        """Unparseable content is a checkpoint error."""
        path = tmp_path / "model.jsonl"
        path.write_text("not json\n")
        with pytest.raises(CheckpointError):
            load_model(path)

    def test_missing_file(self, tmp_path):
        """Unreadable paths are a checkpoint error."""
        with pytest.raises(CheckpointError):
            load_model(tmp_path / "absent.jsonl")

    def test_not_utf8(self, tmp_path, tiny_model):
        """Binary corruption is a checkpoint error, not a decode error."""
        path = tmp_path / "model.jsonl"
        save_model(tiny_model, path)
        path.write_bytes(path.read_bytes() + b"\xff\xfe\n")
        with pytest.raises(CheckpointError, match="UTF-8"):
            load_model(path)
