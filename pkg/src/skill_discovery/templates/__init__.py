"""Templates module exports."""

from .prompts import (
    CATALOG_VARIANTS,
    EXPLORATION_TEMPLATE,
    FULL_LOCATIONS_NOTE,
    HIDDEN_PRIOR_TEMPLATE,
    BASIC_TEMPLATE,
    INGREDIENT_KEYS,
    LABELING_PROMPT,
    OBJECT_LOCATIONS_NOTE,
    ActionCatalog,
    TaskSpec,
    build_prompt,
    default_task,
    get_catalog,
    ingredient_combinations,
)

__all__ = [
    "CATALOG_VARIANTS",
    "EXPLORATION_TEMPLATE",
    "FULL_LOCATIONS_NOTE",
    "HIDDEN_PRIOR_TEMPLATE",
    "BASIC_TEMPLATE",
    "INGREDIENT_KEYS",
    "LABELING_PROMPT",
    "OBJECT_LOCATIONS_NOTE",
    "ActionCatalog",
    "TaskSpec",
    "build_prompt",
    "default_task",
    "get_catalog",
    "ingredient_combinations",
]
