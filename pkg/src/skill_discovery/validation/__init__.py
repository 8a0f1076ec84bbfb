"""Validation module exports."""

from .plans import (
    Plan,
    PlanVerdict,
    parse_plan,
    reference_plan,
    render_plan,
    validate_plan,
)

__all__ = [
    "Plan",
    "PlanVerdict",
    "parse_plan",
    "reference_plan",
    "render_plan",
    "validate_plan",
]
