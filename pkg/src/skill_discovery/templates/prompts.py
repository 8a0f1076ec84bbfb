"""
Prompt templates and action catalogs for high-level planning.

Templates are plain format strings; catalogs map positive integer keys to
action descriptions and are rendered inline as a numbered block.
"""

from itertools import combinations
from typing import Literal, Optional, Sequence

from pydantic import BaseModel, field_validator, model_validator

TemplateId = Literal["basic", "hidden_prior", "exploration"]
CatalogVariant = Literal["skills_only", "with_relevant", "with_irrelevant", "both", "hidden_env"]

CATALOG_VARIANTS: tuple[CatalogVariant, ...] = (
    "skills_only",
    "with_relevant",
    "with_irrelevant",
    "both",
    "hidden_env",
)

BASIC_TEMPLATE = (
    "Given the robotic environment in the image, how can the robot make a stew using the "
    "following ingredients: {ingredients}? The available actions are: \n"
    "{actions}\n"
    "Select the necessary actions to achieve the goal and return only their corresponding "
    "keys in a list, formatted as JSON. No explanation, descriptions, or additional output "
    "is needed."
)

HIDDEN_PRIOR_TEMPLATE = (
    "Given the robotic environment in the image, how can the robot make a stew using the "
    "following ingredients: {ingredients}? {locations} The available actions are: {actions}. "
    "Return only the keys of the actions necessary to complete the task in the correct "
    "sequence, formatted as a list in JSON. No additional text or explanations are required."
)

EXPLORATION_TEMPLATE = (
    "Given the robotic environment in the image, how can the robot make a stew made of "
    "{ingredients}? Only the following actions can be used: {actions}. You are free to "
    "explore the environment using the given actions and ask for an updated version of the "
    "environment."
)

LABELING_PROMPT = (
    "I will provide you with snapshot images of a robot interacting with a single object. "
    "Your task is to analyze each image and predict the robot's specific action based solely "
    "on visual cues. Return a concise description of the action that best fits the images. "
    "Provide only the action description with no additional text or explanations."
)

OBJECT_LOCATIONS_NOTE = (
    "The tomato is located in the right cupboard, the mushroom in the left cupboard, "
    "and the potato in the drawer."
)

FULL_LOCATIONS_NOTE = (
    "The tomato is located in the right cupboard, the mushroom in the left cupboard, "
    "the potato in the drawer, the oil on the left of the stove, and the salt on the "
    "right of the stove."
)

TEMPLATES: dict[str, str] = {
    "basic": BASIC_TEMPLATE,
    "hidden_prior": HIDDEN_PRIOR_TEMPLATE,
    "exploration": EXPLORATION_TEMPLATE,
}

INGREDIENT_KEYS: dict[str, int] = {
    "tomato": 1,
    "mushroom": 2,
    "potato": 3,
    "oil": 4,
    "salt": 5,
}

_SKILL_ACTIONS = [
    "retrieve the object in the right cupboard and add to the pan",
    "retrieve the object in the left cupboard and add to the pan",
    "retrieve the object in the drawer and add to the pan",
    "retrieve the object on the left of the stove and add to the pan",
    "retrieve the object on the right of the stove and add to the pan",
]

_RELEVANT_ACTIONS = [
    "retrieve the object in the right cupboard and add it to the pan",
    "retrieve the object in the left cupboard and add it to the pan",
    "retrieve the object in the drawer and add it to the pan",
    "retrieve the object on the left of the stove and add to the pan",
    "retrieve the object on the right of the stove and add it to the pan",
    "put the pan to top right stove",
    "put the pan to the top left stove",
    "put the pan on the bottom right stove",
    "put the pan to the bottom left stove",
    "close the right cupboard",
    "close the left cupboard",
    "close the drawer",
    "open the drawer",
    "open the right cupboard",
    "open the left cupboard",
    "open the oven",
    "start the blender",
    "close the microwave",
    "open the microwave",
    "start the microwave at high heat",
    "start the microwave at low heat",
    "stop the microwave",
    "plug in the microwave",
]

_IRRELEVANT_ACTIONS = {
    1: "retrieve the object in the right cupboard and add it to the pan",
    2: "retrieve the object in the left cupboard and add to the pan",
    3: "retrieve the object in the drawer and add to the pan",
    4: "retrieve the object on the left of the stove and add to the pan",
    5: "retrieve the object on the right of the stove and add to the pan",
    6: "charge the phone",
    7: "plug in the microwave",
    8: "plug in the phone charger",
    9: "open the door",
    10: "close the door",
    11: "synchronize the clock",
    12: "fill the glass with water",
    14: "wipe the floor",
    15: "mop the floor",
    16: "vacuum the living room",
    17: "vacuum the dining room",
    18: "vacuum the bedroom",
    19: "vacuum the cellar",
    20: "turn on the lights",
    21: "turn off the lights",
    22: "charge the laptop",
    23: "put the kids to sleep",
    24: "wash the clothes",
    25: "start the washing machine",
    26: "start the dryer",
    27: "dry the clothes",
    28: "hang the clothes",
    29: "make the beds",
    30: "clean the desk",
}

# Retrieval key -> key of the action that opens / closes its container
HIDDEN_OPEN_ACTIONS = {1: 14, 2: 15, 3: 13}
HIDDEN_CLOSE_ACTIONS = {1: 10, 2: 11, 3: 12}


class ActionCatalog(BaseModel):
    """Numbered actions offered to the planner."""

    variant: CatalogVariant
    actions: dict[int, str]

    @field_validator("actions")
    @classmethod
    def _check_keys(cls, value: dict[int, str]) -> dict[int, str]:
        if any(key < 1 for key in value):
            raise ValueError("action keys must be positive integers")
        return value

    @model_validator(mode="after")
    def _check_contiguous(self) -> "ActionCatalog":
        if self.variant == "skills_only" and sorted(self.actions) != list(
            range(1, len(self.actions) + 1)
        ):
            raise ValueError("skills_only catalogs must be numbered 1..n")
        return self

    def __len__(self) -> int:
        return len(self.actions)

    def __contains__(self, key: object) -> bool:
        return key in self.actions

    def render(self) -> str:
        """The inline block: { 1:"...", 2:"...", }"""
        items = "".join(f'{key}:"{text}", ' for key, text in self.actions.items())
        return "{ " + items + "}"


class TaskSpec(BaseModel):
    """A stew to make, plus the ground truth used to score plans."""

    ingredients: list[str]
    ingredient_to_key: dict[str, int]
    environment_note: Optional[str] = None
    open_actions: dict[int, int] = {}
    close_actions: dict[int, int] = {}

    @model_validator(mode="after")
    def _check_ingredients(self) -> "TaskSpec":
        if not self.ingredients:
            raise ValueError("a task needs at least one ingredient")
        unknown = [i for i in self.ingredients if i not in self.ingredient_to_key]
        if unknown:
            raise ValueError(f"no retrieval action for ingredient(s): {', '.join(unknown)}")
        return self

    @property
    def hidden(self) -> bool:
        return bool(self.open_actions)

    def required_keys(self) -> set[int]:
        return {self.ingredient_to_key[i] for i in self.ingredients}


def skills_only_catalog() -> ActionCatalog:
    return ActionCatalog(
        variant="skills_only",
        actions={i + 1: text for i, text in enumerate(_SKILL_ACTIONS)},
    )


def with_relevant_catalog() -> ActionCatalog:
    return ActionCatalog(
        variant="with_relevant",
        actions={i + 1: text for i, text in enumerate(_RELEVANT_ACTIONS)},
    )


def with_irrelevant_catalog() -> ActionCatalog:
    return ActionCatalog(variant="with_irrelevant", actions=dict(_IRRELEVANT_ACTIONS))


def both_catalog() -> ActionCatalog:
    """Relevant actions, then the irrelevant-only ones numbered after them."""
    actions = {i + 1: text for i, text in enumerate(_RELEVANT_ACTIONS)}
    extras = [
        text
        for key, text in _IRRELEVANT_ACTIONS.items()
        if key > len(_SKILL_ACTIONS) and text not in _RELEVANT_ACTIONS
    ]
    for text in extras:
        actions[len(actions) + 1] = text
    return ActionCatalog(variant="both", actions=actions)


def hidden_env_catalog() -> ActionCatalog:
    """Skill actions plus opening and closing the cupboards and drawer."""
    keys = [*range(1, len(_SKILL_ACTIONS) + 1), *range(10, 16)]
    return ActionCatalog(
        variant="hidden_env",
        actions={key: _RELEVANT_ACTIONS[key - 1] for key in keys},
    )


CATALOG_BUILDERS = {
    "skills_only": skills_only_catalog,
    "with_relevant": with_relevant_catalog,
    "with_irrelevant": with_irrelevant_catalog,
    "both": both_catalog,
    "hidden_env": hidden_env_catalog,
}


def get_catalog(variant: str) -> ActionCatalog:
    """Catalog by variant name."""
    if variant not in CATALOG_BUILDERS:
        raise ValueError(f"unknown catalog variant: {variant}")
    return CATALOG_BUILDERS[variant]()


def default_task(
    ingredients: Sequence[str],
    catalog: Optional[ActionCatalog] = None,
    full_locations: bool = False,
) -> TaskSpec:
    """
    Stew task in the default kitchen; the hidden variant adds the location note.

    With full_locations the note also places the oil and the salt.
    """
    hidden = catalog is not None and catalog.variant == "hidden_env"
    note = FULL_LOCATIONS_NOTE if full_locations else OBJECT_LOCATIONS_NOTE
    return TaskSpec(
        ingredients=list(ingredients),
        ingredient_to_key=dict(INGREDIENT_KEYS),
        environment_note=note if hidden else None,
        open_actions=dict(HIDDEN_OPEN_ACTIONS) if hidden else {},
        close_actions=dict(HIDDEN_CLOSE_ACTIONS) if hidden else {},
    )


def ingredient_combinations(ingredients: Sequence[str] = tuple(INGREDIENT_KEYS)) -> list[list[str]]:
    """All non-empty subsets, smallest first (31 for five ingredients)."""
    return [
        list(combo)
        for size in range(1, len(ingredients) + 1)
        for combo in combinations(ingredients, size)
    ]


def build_prompt(task: TaskSpec, catalog: ActionCatalog, template: str) -> str:
    """
    Instantiate a planning template.

    Raises:
        ValueError: Unknown template or empty catalog
    """
    if template not in TEMPLATES:
        raise ValueError(f"unknown template: {template}")
    if not catalog.actions:
        raise ValueError("cannot build a prompt from an empty action catalog")

    fields = {
        "ingredients": ", ".join(task.ingredients),
        "actions": catalog.render(),
    }
    if template == "hidden_prior":
        fields["locations"] = task.environment_note or OBJECT_LOCATIONS_NOTE
    return TEMPLATES[template].format(**fields)
