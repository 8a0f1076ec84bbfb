"""
Configuration type definitions using Pydantic.

Config files use camelCase keys; Python code uses snake_case attributes.
Unknown keys are rejected everywhere.
"""

from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from pydantic.alias_generators import to_camel

Vec3 = tuple[float, float, float]


class _ConfigModel(BaseModel):
    """Shared settings for config sections."""

    model_config = ConfigDict(
        alias_generator=to_camel,
        populate_by_name=True,
        extra="forbid",
        protected_namespaces=(),
    )


class SkillSpec(_ConfigModel):
    """One demonstrated skill: where objects are taken from and where they go."""

    name: str
    ingredient: str
    action_key: int = Field(ge=1)
    source_min: Vec3
    source_max: Vec3
    sink: Vec3 = (0.30, 0.00, 0.15)

    @model_validator(mode="after")
    def _check_region(self) -> "SkillSpec":
        if any(hi <= lo for lo, hi in zip(self.source_min, self.source_max)):
            raise ValueError(f"degenerate source region for skill '{self.name}'")
        return self


def _default_skills() -> list[SkillSpec]:
    pan = (0.30, 0.00, 0.15)
    return [
        SkillSpec(
            name="right_cupboard", ingredient="tomato", action_key=1,
            source_min=(0.40, -0.40, 0.50), source_max=(0.50, -0.30, 0.60), sink=pan,
        ),
        SkillSpec(
            name="left_cupboard", ingredient="mushroom", action_key=2,
            source_min=(0.40, 0.30, 0.50), source_max=(0.50, 0.40, 0.60), sink=pan,
        ),
        SkillSpec(
            name="drawer", ingredient="potato", action_key=3,
            source_min=(0.50, -0.05, 0.10), source_max=(0.60, 0.05, 0.20), sink=pan,
        ),
        SkillSpec(
            name="stove_left", ingredient="oil", action_key=4,
            source_min=(0.25, 0.30, 0.00), source_max=(0.35, 0.40, 0.10), sink=pan,
        ),
        SkillSpec(
            name="stove_right", ingredient="salt", action_key=5,
            source_min=(0.25, -0.40, 0.00), source_max=(0.35, -0.30, 0.10), sink=pan,
        ),
    ]


class KitchenConfig(_ConfigModel):
    """Synthetic kitchen demonstration generator settings."""

    skills: list[SkillSpec] = Field(default_factory=_default_skills)
    demos_per_skill: int | list[int] = 100
    noise_std: float = Field(default=0.002, ge=0.0)
    seed: int = 0
    length: int = Field(default=150, ge=2)
    d: int = 4
    home: Vec3 = (0.10, 0.00, 0.40)
    contact_time: float = Field(default=0.4, gt=0.0, lt=1.0)
    release_time: float = Field(default=0.85, gt=0.0, le=1.0)

    @model_validator(mode="after")
    def _check_counts(self) -> "KitchenConfig":
        if not self.skills:
            raise ValueError("at least one skill is required")
        counts = self.counts()
        if len(counts) != len(self.skills):
            raise ValueError(
                f"demosPerSkill lists {len(counts)} counts for {len(self.skills)} skills"
            )
        if any(c < 1 for c in counts):
            raise ValueError("demosPerSkill must be >= 1 for every skill")
        if self.release_time <= self.contact_time:
            raise ValueError("releaseTime must come after contactTime")
        return self

    def counts(self) -> list[int]:
        """Per-skill demonstration counts."""
        if isinstance(self.demos_per_skill, int):
            return [self.demos_per_skill] * len(self.skills)
        return list(self.demos_per_skill)


class TrainingConfig(_ConfigModel):
    """Model architecture and optimization settings."""

    beta: float = Field(default=0.25, gt=0.0)
    iterations: int = Field(default=30000, ge=0)
    n_max: int = Field(default=10, ge=1)
    m_max: int = Field(default=10, ge=1)
    lr: float = Field(default=1e-4, gt=0.0)
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    clip_norm: float = Field(default=1.0, gt=0.0)
    seed: int = 0
    mode: Literal["unsupervised", "self_supervised"] = "unsupervised"
    codebook_size: int = Field(default=5, ge=1)
    latent_dim: int = Field(default=16, ge=1)
    hidden_sizes: list[int] = Field(default_factory=lambda: [128, 128])
    loss_window: int = Field(default=1000, ge=1)
    log_every: int = Field(default=1000, ge=1)

    @field_validator("hidden_sizes")
    @classmethod
    def _check_hidden(cls, value: list[int]) -> list[int]:
        if any(width < 1 for width in value):
            raise ValueError("hidden layer widths must be positive")
        return value


class PlannerConfig(_ConfigModel):
    """Low-level (latent gradient descent) planner defaults."""

    tolerance: float = Field(default=0.02, gt=0.0)
    max_iters: int = Field(default=2000, ge=1)
    step_size: float = Field(default=0.05, gt=0.0)
    divergence_factor: float = Field(default=10.0, gt=1.0)
    trajectory_length: int = Field(default=150, ge=2)
    contact_window: int = Field(default=5, ge=0)
    trials_per_skill: int = Field(default=20, ge=1)


class SweepConfig(_ConfigModel):
    """Codebook-size sweep and batch training settings."""

    sizes: list[int] = Field(default_factory=lambda: [3, 5, 10, 20])
    batch: int = Field(default=10, ge=1)

    @field_validator("sizes")
    @classmethod
    def _check_sizes(cls, value: list[int]) -> list[int]:
        if not value or any(k < 1 for k in value):
            raise ValueError("sizes must be a non-empty list of positive integers")
        return value


class ClientConfig(_ConfigModel):
    """LLM client settings."""

    kind: Literal["http", "mock"] = "mock"
    endpoint: str = "https://api.openai.com/v1/chat/completions"
    model_name: str = "gpt-4o"
    timeout_s: float = Field(default=60.0, gt=0.0)
    retries: int = Field(default=2, ge=0)
    api_key_env_var: str = "SKILL_LLM_API_KEY"
    parallelism: int = Field(default=1, ge=1)
    mock_error_rate: float = Field(default=0.0, ge=0.0, le=1.0)


class PipelineConfig(_ConfigModel):
    """Root configuration (from JSON file)."""

    version: str = "1.0"
    seed: int = 0
    output_dir: str = "out"
    jobs: int = Field(default=1, ge=1)
    kitchen: KitchenConfig = Field(default_factory=KitchenConfig)
    training: TrainingConfig = Field(default_factory=TrainingConfig)
    sweep: SweepConfig = Field(default_factory=SweepConfig)
    planner: PlannerConfig = Field(default_factory=PlannerConfig)
    client: ClientConfig = Field(default_factory=ClientConfig)


class ResolvedClient(BaseModel):
    """Client settings with environment references substituted."""

    model_config = ConfigDict(protected_namespaces=())

    kind: str
    endpoint: str
    model_name: str
    timeout_s: float
    retries: int
    parallelism: int
    mock_error_rate: float
    api_key: str = ""


class LoadResult(BaseModel):
    """Result of loading a configuration file."""

    success: bool
    config: Optional[PipelineConfig] = None
    client: Optional[ResolvedClient] = None
    errors: list[str] = []
    warnings: list[str] = []
