"""
Demonstration datasets.

Trajectory types, the synthetic kitchen generator, normalization,
context/target sampling and dataset files.
"""

import logging
from pathlib import Path
from typing import NamedTuple, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, ValidationError, field_validator, model_validator

from .config.types import KitchenConfig, Vec3
from .exceptions import DataError, DatasetParseError, SchemaError
from .serialization import iter_records, write_records

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1
ZERO_VARIANCE_THRESHOLD = 1e-12


class TrajectoryPoint(NamedTuple):
    """One sample (t, SM(t)) of a demonstration."""

    t: float
    sm: np.ndarray


class NormStats(BaseModel):
    """Per-channel affine normalization: (sm - mean) / scale."""

    model_config = ConfigDict(frozen=True)

    mean: tuple[float, ...]
    scale: tuple[float, ...]
    zero_variance: tuple[bool, ...]

    def apply(self, sm: np.ndarray) -> np.ndarray:
        return (np.asarray(sm, dtype=float) - np.asarray(self.mean)) / np.asarray(self.scale)

    def invert(self, sm: np.ndarray) -> np.ndarray:
        return np.asarray(sm, dtype=float) * np.asarray(self.scale) + np.asarray(self.mean)


def _frozen_array(value) -> np.ndarray:
    array = np.array(value, dtype=float)
    array.setflags(write=False)
    return array


class Demonstration(BaseModel):
    """A time-indexed sensorimotor trajectory."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    id: str
    times: np.ndarray
    sm: np.ndarray
    skill_label: Optional[str] = None
    contact_time: Optional[float] = None
    object_pose: Optional[Vec3] = None

    @field_validator("times", "sm", mode="before")
    @classmethod
    def _to_array(cls, value) -> np.ndarray:
        return _frozen_array(value)

    @model_validator(mode="after")
    def _check_shapes(self) -> "Demonstration":
        if self.times.ndim != 1 or self.times.size == 0:
            raise ValueError(f"demo {self.id}: times must be a non-empty vector")
        if self.sm.ndim != 2 or self.sm.shape[0] != self.times.size:
            raise ValueError(f"demo {self.id}: sm must have one row per time step")
        if self.times[0] < 0.0 or self.times[-1] > 1.0:
            raise ValueError(f"demo {self.id}: times must lie in [0, 1]")
        if np.any(np.diff(self.times) <= 0.0):
            raise ValueError(f"demo {self.id}: times must be strictly increasing")
        if not np.all(np.isfinite(self.sm)):
            raise ValueError(f"demo {self.id}: sm contains non-finite values")
        return self

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Demonstration):
            return NotImplemented
        return (
            self.id == other.id
            and self.skill_label == other.skill_label
            and self.contact_time == other.contact_time
            and self.object_pose == other.object_pose
            and np.array_equal(self.times, other.times)
            and np.array_equal(self.sm, other.sm)
        )

    __hash__ = None  # type: ignore[assignment]

    @property
    def length(self) -> int:
        return int(self.times.size)

    @property
    def d(self) -> int:
        return int(self.sm.shape[1])

    @property
    def points(self) -> list[TrajectoryPoint]:
        return [TrajectoryPoint(float(t), row) for t, row in zip(self.times, self.sm)]


class Dataset(BaseModel):
    """A set of demonstrations sharing one sensorimotor dimension."""

    model_config = ConfigDict(frozen=True)

    demos: tuple[Demonstration, ...]
    d: int
    norm_stats: Optional[NormStats] = None

    @model_validator(mode="after")
    def _check_dims(self) -> "Dataset":
        for demo in self.demos:
            if demo.d != self.d:
                raise ValueError(f"demo {demo.id} has d={demo.d}, dataset has d={self.d}")
        ids = [demo.id for demo in self.demos]
        if len(set(ids)) != len(ids):
            raise ValueError("demonstration ids must be unique")
        return self

    def __len__(self) -> int:
        return len(self.demos)

    @property
    def normalized(self) -> bool:
        return self.norm_stats is not None

    def by_id(self) -> dict[str, Demonstration]:
        return {demo.id: demo for demo in self.demos}

    def labels(self) -> dict[str, Optional[str]]:
        """Ground-truth labels. Only evaluation code reads these."""
        return {demo.id: demo.skill_label for demo in self.demos}

    def has_labels(self) -> bool:
        return bool(self.demos) and all(demo.skill_label is not None for demo in self.demos)

    def without_labels(self) -> "Dataset":
        stripped = tuple(demo.model_copy(update={"skill_label": None}) for demo in self.demos)
        return self.model_copy(update={"demos": stripped})


# ---------------------------------------------------------------------------
# Synthetic kitchen generator
# ---------------------------------------------------------------------------


def min_jerk_profile(tau: np.ndarray) -> np.ndarray:
    """Minimum-jerk progress 0 -> 1 with zero boundary velocity and acceleration."""
    tau = np.clip(tau, 0.0, 1.0)
    return 10 * tau**3 - 15 * tau**4 + 6 * tau**5


def _grid_index(time: float, length: int) -> int:
    return int(round(time * (length - 1)))


def _reach_and_transfer(
    times: np.ndarray,
    home: np.ndarray,
    obj: np.ndarray,
    sink: np.ndarray,
    i_contact: int,
    i_release: int,
) -> np.ndarray:
    """Noiseless [x, y, z, gripper] rows for one demonstration."""
    t_c = times[i_contact]
    t_r = times[i_release]
    positions = np.empty((times.size, 3))

    reach = times <= t_c
    s = min_jerk_profile(times[reach] / t_c)
    positions[reach] = home + (obj - home) * s[:, None]

    transfer = (times > t_c) & (times <= t_r)
    s = min_jerk_profile((times[transfer] - t_c) / (t_r - t_c))
    positions[transfer] = obj + (sink - obj) * s[:, None]

    positions[times > t_r] = sink

    gripper = np.zeros(times.size)
    gripper[i_contact:i_release] = 1.0
    return np.column_stack([positions, gripper])


def generate_synthetic_dataset(cfg: KitchenConfig) -> Dataset:
    """
    Generate reach-and-transfer demonstrations for every skill in the kitchen.

    Each demo reaches from the home pose to an object sampled uniformly in its
    skill's source box (gripper closes at contact), carries it to the sink
    (gripper opens) and waits there. Gaussian noise is added to positions only.

    Raises:
        DataError: If the config asks for anything but 4-channel data
    """
    if cfg.d != 4:
        raise DataError(f"the kitchen generator only emits d=4 data, got d={cfg.d}")

    rng = np.random.default_rng(cfg.seed)
    times = np.linspace(0.0, 1.0, cfg.length)
    i_contact = _grid_index(cfg.contact_time, cfg.length)
    i_release = _grid_index(cfg.release_time, cfg.length)
    if not 0 < i_contact < i_release < cfg.length:
        raise DataError("contactTime and releaseTime collapse onto the same grid step")

    home = np.asarray(cfg.home, dtype=float)
    demos: list[Demonstration] = []

    for skill, count in zip(cfg.skills, cfg.counts()):
        low = np.asarray(skill.source_min, dtype=float)
        high = np.asarray(skill.source_max, dtype=float)
        sink = np.asarray(skill.sink, dtype=float)
        for i in range(count):
            obj = rng.uniform(low, high)
            sm = _reach_and_transfer(times, home, obj, sink, i_contact, i_release)
            sm[:, :3] += rng.normal(0.0, cfg.noise_std, size=(cfg.length, 3))
            demos.append(
                Demonstration(
                    id=f"{skill.name}-{i:03d}",
                    times=times,
                    sm=sm,
                    skill_label=skill.name,
                    contact_time=float(times[i_contact]),
                    object_pose=tuple(float(v) for v in obj),
                )
            )

    logger.debug("generated %d demonstrations for %d skills", len(demos), len(cfg.skills))
    return Dataset(demos=tuple(demos), d=cfg.d)


def default_kitchen() -> KitchenConfig:
    """The five-skill stew kitchen with 100 demonstrations per skill."""
    return KitchenConfig()


def uneven_counts(n_skills: int, low: int = 15, high: int = 60, seed: int = 0) -> list[int]:
    """Random per-skill demonstration counts in [low, high]."""
    rng = np.random.default_rng(seed)
    return [int(c) for c in rng.integers(low, high + 1, size=n_skills)]


def sample_environment(cfg: KitchenConfig, rng: np.random.Generator) -> dict[str, Vec3]:
    """One in-region object pose per skill, keyed by skill name."""
    return {
        skill.name: tuple(float(v) for v in rng.uniform(skill.source_min, skill.source_max))
        for skill in cfg.skills
    }


# ---------------------------------------------------------------------------
# Normalization
# ---------------------------------------------------------------------------


def compute_norm_stats(ds: Dataset) -> NormStats:
    """Zero-mean, unit-variance statistics over all points of all demos."""
    if not ds.demos:
        raise DataError("cannot compute normalization statistics of an empty dataset")
    stacked = np.vstack([demo.sm for demo in ds.demos])
    mean = stacked.mean(axis=0)
    std = stacked.std(axis=0)
    zero = std < ZERO_VARIANCE_THRESHOLD
    scale = np.where(zero, 1.0, std)
    return NormStats(
        mean=tuple(float(v) for v in mean),
        scale=tuple(float(v) for v in scale),
        zero_variance=tuple(bool(v) for v in zero),
    )


def normalize_dataset(ds: Dataset, stats: Optional[NormStats] = None) -> Dataset:
    """
    Shift and scale every sensorimotor channel; times are untouched.

    Args:
        ds: A dataset that is not yet normalized
        stats: Existing statistics to apply (e.g. a trained model's); computed if None

    Raises:
        DataError: If the dataset is already normalized or stats do not fit
    """
    if ds.normalized:
        raise DataError("dataset is already normalized")
    stats = stats or compute_norm_stats(ds)
    if len(stats.mean) != ds.d:
        raise DataError(f"normalization statistics have {len(stats.mean)} channels, need {ds.d}")
    demos = tuple(
        Demonstration(
            id=demo.id,
            times=demo.times,
            sm=stats.apply(demo.sm),
            skill_label=demo.skill_label,
            contact_time=demo.contact_time,
            object_pose=demo.object_pose,
        )
        for demo in ds.demos
    )
    return Dataset(demos=demos, d=ds.d, norm_stats=stats)


def denormalize_dataset(ds: Dataset) -> Dataset:
    """Invert normalize_dataset."""
    if ds.norm_stats is None:
        raise DataError("dataset is not normalized")
    demos = tuple(
        demo.model_copy(update={"sm": _frozen_array(ds.norm_stats.invert(demo.sm))})
        for demo in ds.demos
    )
    return Dataset(demos=demos, d=ds.d)


# ---------------------------------------------------------------------------
# Context / target sampling
# ---------------------------------------------------------------------------


def sample_context(
    demo: Demonstration,
    rng: np.random.Generator,
    n_max: int,
    m_max: int,
    n: Optional[int] = None,
    m: Optional[int] = None,
) -> tuple[list[TrajectoryPoint], list[TrajectoryPoint]]:
    """
    Draw context and target points from one demonstration.

    Context size is uniform on 1..n_max and target size uniform on 1..m_max,
    each drawn without replacement; targets may overlap the context.
    Explicit n or m fix the sizes instead of drawing them.
    """
    length = demo.length
    if not (1 <= n_max <= length and 1 <= m_max <= length):
        raise DataError(
            f"context bounds n_max={n_max}, m_max={m_max} must lie in [1, {length}]"
        )

    n = int(rng.integers(1, n_max + 1)) if n is None else n
    m = int(rng.integers(1, m_max + 1)) if m is None else m
    context_idx = rng.choice(length, size=n, replace=False)
    target_idx = rng.choice(length, size=m, replace=False)

    context = [TrajectoryPoint(float(demo.times[i]), demo.sm[i]) for i in context_idx]
    targets = [TrajectoryPoint(float(demo.times[i]), demo.sm[i]) for i in target_idx]
    return context, targets


# ---------------------------------------------------------------------------
# Dataset files
# ---------------------------------------------------------------------------


class _DemoRecord(BaseModel):
    """Schema of one demo line."""

    model_config = ConfigDict(extra="forbid")

    id: str
    skill_label: Optional[str] = None
    contact_time: Optional[float] = None
    object_pose: Optional[Vec3] = None
    points: list[list[float]]


class _HeaderRecord(BaseModel):
    """Schema of the header line."""

    version: int
    d: int
    normalized: bool
    norm_stats: Optional[NormStats] = None


def demo_record(demo: Demonstration) -> dict:
    """Serializable record for one demonstration."""
    record: dict = {"id": demo.id}
    if demo.skill_label is not None:
        record["skill_label"] = demo.skill_label
    if demo.contact_time is not None:
        record["contact_time"] = demo.contact_time
    if demo.object_pose is not None:
        record["object_pose"] = list(demo.object_pose)
    record["points"] = np.column_stack([demo.times, demo.sm])
    return record


def write_dataset(ds: Dataset, path: str | Path) -> None:
    """Write a header line then one line per demonstration."""
    header: dict = {"version": FORMAT_VERSION, "d": ds.d, "normalized": ds.normalized}
    if ds.norm_stats is not None:
        header["norm_stats"] = ds.norm_stats.model_dump()
    write_records(path, [header] + [demo_record(demo) for demo in ds.demos])
    logger.debug("wrote %d demonstrations to %s", len(ds), path)


def read_dataset(path: str | Path) -> Dataset:
    """
    Read a dataset file written by write_dataset.

    Raises:
        DatasetParseError: Malformed line (names the line number)
        SchemaError: Version, field or dimension violations
    """
    records = iter_records(path)
    try:
        first_line, raw_header = next(records)
    except StopIteration:
        raise DatasetParseError("missing header record", line=1) from None

    try:
        header = _HeaderRecord.model_validate(raw_header)
    except ValidationError as e:
        raise SchemaError(f"line {first_line}: invalid header: {e.errors()[0]['msg']}") from e
    if header.version != FORMAT_VERSION:
        raise SchemaError(f"unsupported dataset version {header.version}")
    if header.normalized != (header.norm_stats is not None):
        raise SchemaError("header normalized flag disagrees with norm_stats")

    demos: list[Demonstration] = []
    for number, raw in records:
        try:
            record = _DemoRecord.model_validate(raw)
        except ValidationError as e:
            raise SchemaError(f"line {number}: invalid demo record: {e.errors()[0]['msg']}") from e

        widths = {len(row) for row in record.points}
        if widths != {header.d + 1}:
            raise SchemaError(
                f"line {number}: demo {record.id} rows have widths {sorted(widths)}, "
                f"dataset expects d={header.d}"
            )
        points = np.asarray(record.points, dtype=float)
        try:
            demos.append(
                Demonstration(
                    id=record.id,
                    times=points[:, 0],
                    sm=points[:, 1:],
                    skill_label=record.skill_label,
                    contact_time=record.contact_time,
                    object_pose=record.object_pose,
                )
            )
        except ValidationError as e:
            raise SchemaError(f"line {number}: {e.errors()[0]['msg']}") from e

    try:
        return Dataset(demos=tuple(demos), d=header.d, norm_stats=header.norm_stats)
    except ValidationError as e:
        raise SchemaError(e.errors()[0]["msg"]) from e
