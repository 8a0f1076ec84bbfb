"""Shared fixtures: a small kitchen and a tiny network so unit tests stay fast."""

import pytest

from skill_discovery.config.types import KitchenConfig, TrainingConfig
from skill_discovery.dataset import generate_synthetic_dataset, normalize_dataset
from skill_discovery.vqcnmp import init_model


@pytest.fixture
def small_kitchen() -> KitchenConfig:
    return KitchenConfig(demos_per_skill=3, length=30, seed=0)


@pytest.fixture
def raw_dataset(small_kitchen):
    return generate_synthetic_dataset(small_kitchen)


@pytest.fixture
def dataset(raw_dataset):
    return normalize_dataset(raw_dataset)


@pytest.fixture
def tiny_cfg() -> TrainingConfig:
    return TrainingConfig(
        iterations=40,
        hidden_sizes=[16, 16],
        latent_dim=4,
        codebook_size=5,
        n_max=5,
        m_max=5,
        lr=1e-3,
        loss_window=10,
        log_every=20,
    )


@pytest.fixture
def tiny_model(dataset, tiny_cfg):
    return init_model(dataset.d, tiny_cfg, dataset.norm_stats)
