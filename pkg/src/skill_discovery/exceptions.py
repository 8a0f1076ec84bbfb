"""
Error hierarchy.

Every error carries the CLI exit code of its failure class.
"""

from typing import Optional


class SkillDiscoveryError(Exception):
    """Base class for all library errors."""

    exit_code = 1


class ConfigError(SkillDiscoveryError):
    """Invalid or unreadable configuration."""

    exit_code = 2


class DataError(SkillDiscoveryError, ValueError):
    """Invalid dataset, trajectory or checkpoint content."""

    exit_code = 3


class DatasetParseError(DataError):
    """A dataset file line could not be parsed."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(f"{prefix}{message}")


class SchemaError(DataError):
    """Parsed content does not satisfy the dataset schema."""


class CheckpointError(DataError):
    """Checkpoint version, shape or integrity failure."""


class TrainingError(SkillDiscoveryError):
    """Training or optimization failure."""

    exit_code = 4


class NonFiniteLossError(TrainingError):
    """A training step produced a non-finite loss term."""

    def __init__(self, step: int, k: int, terms: dict[str, float]):
        self.step = step
        self.k = k
        self.terms = terms
        rendered = ", ".join(f"{name}={value!r}" for name, value in terms.items())
        super().__init__(f"non-finite loss at step {step} (k={k}): {rendered}")


class GradientCheckError(TrainingError):
    """Analytic gradients disagree with finite differences."""


class ClientError(SkillDiscoveryError):
    """LLM client transport or protocol failure."""

    exit_code = 5

    def __init__(self, message: str, retries: int = 0):
        self.retries = retries
        super().__init__(f"{message} (after {retries} retries)" if retries else message)


class ClientTimeoutError(ClientError):
    """LLM client call timed out."""


class PlanParseError(ValueError):
    """An LLM response did not contain a usable plan."""

    def __init__(self, message: str, key: Optional[int] = None):
        self.key = key
        super().__init__(message)
