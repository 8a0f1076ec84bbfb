"""
Skill Discovery CLI - Python

Config-driven CLI and library for discovering skills from unlabeled
demonstrations and planning with them at two levels.
"""

__version__ = "1.0.0"

from .config import load_config, merge_overrides
from .config.types import PipelineConfig, ResolvedClient
from .dataset import (
    Dataset,
    Demonstration,
    generate_synthetic_dataset,
    normalize_dataset,
    read_dataset,
    write_dataset,
)
from .vqcnmp import (
    VqCnmpModel,
    assign_all,
    decode,
    encode,
    finetune,
    load_model,
    quantize,
    save_model,
    train,
)
from .discovery import cluster_report, codebook_sweep, rank_models
from .planning import execute_plan, optimize_skill_vector, plan_task, run_benchmark
from .api import HttpLlmClient, MockLlmClient, make_client

__all__ = [
    # Config
    "load_config",
    "merge_overrides",
    "PipelineConfig",
    "ResolvedClient",
    # Data
    "Dataset",
    "Demonstration",
    "generate_synthetic_dataset",
    "normalize_dataset",
    "read_dataset",
    "write_dataset",
    # Model
    "VqCnmpModel",
    "encode",
    "quantize",
    "decode",
    "train",
    "finetune",
    "assign_all",
    "save_model",
    "load_model",
    # Discovery
    "cluster_report",
    "rank_models",
    "codebook_sweep",
    # Planning
    "plan_task",
    "run_benchmark",
    "optimize_skill_vector",
    "execute_plan",
    # Clients
    "MockLlmClient",
    "HttpLlmClient",
    "make_client",
]
