"""Config module exports."""

from .types import (
    SkillSpec,
    KitchenConfig,
    TrainingConfig,
    PlannerConfig,
    SweepConfig,
    ClientConfig,
    PipelineConfig,
    ResolvedClient,
    LoadResult,
)
from .loader import load_config, merge_overrides, default_config_dict, resolve_client
from .resolver import resolve_env_vars

__all__ = [
    "SkillSpec",
    "KitchenConfig",
    "TrainingConfig",
    "PlannerConfig",
    "SweepConfig",
    "ClientConfig",
    "PipelineConfig",
    "ResolvedClient",
    "LoadResult",
    "load_config",
    "merge_overrides",
    "default_config_dict",
    "resolve_client",
    "resolve_env_vars",
]
