"""Planning module exports."""

from .high_level import (
    BenchmarkReport,
    TrialRecord,
    label_skill,
    plan_task,
    run_benchmark,
    snapshot_indices,
)
from .low_level import (
    LowLevelReport,
    PlanRequest,
    PlanResult,
    SuccessChecker,
    contact_times_by_index,
    evaluate_low_level,
    execute_plan,
    export_plan,
    optimize_skill_vector,
    plan_loss,
    score_execution,
)

__all__ = [
    "BenchmarkReport",
    "TrialRecord",
    "label_skill",
    "plan_task",
    "run_benchmark",
    "snapshot_indices",
    "LowLevelReport",
    "PlanRequest",
    "PlanResult",
    "SuccessChecker",
    "contact_times_by_index",
    "evaluate_low_level",
    "execute_plan",
    "export_plan",
    "optimize_skill_vector",
    "plan_loss",
    "score_execution",
]
