"""
Plan Validation Module

Parsing of planner responses and scoring of plans against a task.
"""

import json
import re
from typing import Optional

from pydantic import BaseModel

from ..exceptions import PlanParseError
from ..templates.prompts import ActionCatalog, TaskSpec

# First bracketed list of (optionally quoted) integers
_LIST_PATTERN = re.compile(r'\[\s*(?:"?\d+"?(?:\s*,\s*"?\d+"?)*\s*,?)?\s*\]')


class Plan(BaseModel):
    """Ordered action keys chosen by the planner."""

    keys: list[int]
    raw_response: str = ""


class PlanVerdict(BaseModel):
    """Result of scoring a plan."""

    success: bool
    missing: list[int] = []
    extra: list[int] = []
    order_violation: bool = False
    recall: float = 0.0
    parse_error: Optional[str] = None


def render_plan(plan: Plan) -> str:
    """Canonical rendering, e.g. [1, 3, 5]."""
    return json.dumps(plan.keys)


def parse_plan(response: str, catalog: ActionCatalog) -> Plan:
    """
    Extract the first integer list from a response.

    Surrounding prose and code fences are ignored.

    Raises:
        PlanParseError: No list found, or a key outside the catalog
    """
    match = _LIST_PATTERN.search(response)
    if match is None:
        raise PlanParseError("no integer list found in response")

    keys = [int(token) for token in re.findall(r"\d+", match.group(0))]
    for key in keys:
        if key not in catalog:
            raise PlanParseError(f"action key {key} is not in the catalog", key=key)
    return Plan(keys=keys, raw_response=response)


def _retrieval_order_ok(keys: list[int], task: TaskSpec) -> bool:
    """Each hidden retrieval happens while its container is open."""
    opened: dict[int, bool] = {r: False for r in task.open_actions}
    openers = {o: r for r, o in task.open_actions.items()}
    closers = {c: r for r, c in task.close_actions.items()}
    for key in keys:
        if key in openers:
            opened[openers[key]] = True
        elif key in closers:
            opened[closers[key]] = False
        elif key in opened and not opened[key]:
            return False
    return True


def validate_plan(plan: Plan, task: TaskSpec) -> PlanVerdict:
    """
    Score a plan: success iff it retrieves exactly the required ingredients.

    Order is free in the open environment. In the hidden variant, opening and
    closing the containers of required ingredients is allowed, and each such
    retrieval must come after its container was opened (and not closed again).
    Duplicates and any other actions count as extra.
    """
    required = task.required_keys()
    allowed = set(required)
    if task.hidden:
        for key in required:
            allowed.update(
                aux for aux in (task.open_actions.get(key), task.close_actions.get(key)) if aux
            )

    seen: set[int] = set()
    extra = []
    for key in plan.keys:
        if key in seen or key not in allowed:
            extra.append(key)
        seen.add(key)

    missing = sorted(required - seen)
    order_violation = task.hidden and not _retrieval_order_ok(plan.keys, task)
    return PlanVerdict(
        success=not missing and not extra and not order_violation,
        missing=missing,
        extra=extra,
        order_violation=order_violation,
        recall=len(required & seen) / len(required),
    )


def reference_plan(task: TaskSpec) -> Plan:
    """A correct plan: required opens first (hidden variant), then retrievals."""
    retrievals = [task.ingredient_to_key[i] for i in task.ingredients]
    opens = [task.open_actions[k] for k in retrievals if k in task.open_actions]
    return Plan(keys=opens + retrievals)
