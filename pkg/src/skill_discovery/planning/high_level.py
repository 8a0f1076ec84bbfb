"""
High-level planning through an LLM.

Builds the prompt, sends it with optional environment images, parses the
returned key list and scores it against the task.
"""

import json
import logging
import threading
from concurrent.futures import FIRST_EXCEPTION, ThreadPoolExecutor, wait
from pathlib import Path
from typing import Optional, Sequence

from pydantic import BaseModel

from ..api import LlmClient
from ..exceptions import PlanParseError
from ..templates.prompts import (
    LABELING_PROMPT,
    ActionCatalog,
    TaskSpec,
    build_prompt,
    default_task,
    get_catalog,
    ingredient_combinations,
)
from ..validation.plans import Plan, PlanVerdict, parse_plan, reference_plan, validate_plan

logger = logging.getLogger(__name__)


def plan_task(
    client: LlmClient,
    task: TaskSpec,
    catalog: ActionCatalog,
    template: str = "basic",
    images: Optional[Sequence[bytes]] = None,
    trial_index: int = 0,
) -> tuple[Plan, PlanVerdict]:
    """
    Build, send, parse and validate one planning request.

    An unparseable response is a failed trial (empty plan, verdict with
    parse_error), not an exception. Client failures propagate.
    """
    prompt = build_prompt(task, catalog, template)
    metadata = {
        "template": template,
        "ingredients": list(task.ingredients),
        "variant": catalog.variant,
        "catalog_size": len(catalog),
        "answer": reference_plan(task).keys,
        "trial_index": trial_index,
    }
    logger.debug("prompt: %s", prompt)
    response = client.send(prompt, images=images, metadata=metadata)
    logger.debug("response: %s", response)

    try:
        plan = parse_plan(response, catalog)
    except PlanParseError as e:
        logger.debug("unparseable response: %s", e)
        verdict = PlanVerdict(
            success=False, missing=sorted(task.required_keys()), parse_error=str(e)
        )
        return Plan(keys=[], raw_response=response), verdict

    verdict = validate_plan(plan, task)
    logger.debug("plan %s -> %s", plan.keys, verdict)
    return plan, verdict


def template_for(catalog: ActionCatalog) -> str:
    """The template a catalog variant is benchmarked with."""
    return "hidden_prior" if catalog.variant == "hidden_env" else "basic"


class TrialRecord(BaseModel):
    """One benchmark trial."""

    variant: str
    template: str
    ingredients: list[str]
    trial_index: int
    keys: list[int]
    response: str
    verdict: PlanVerdict


class VariantStats(BaseModel):
    """Aggregated trials of one catalog variant."""

    trials: int = 0
    successes: int = 0
    parse_failures: int = 0
    recall_sum: float = 0.0

    @property
    def success_rate(self) -> float:
        return self.successes / self.trials if self.trials else 0.0

    @property
    def mean_recall(self) -> float:
        return self.recall_sum / self.trials if self.trials else 0.0

    def add(self, record: TrialRecord) -> None:
        self.trials += 1
        self.successes += int(record.verdict.success)
        self.parse_failures += int(record.verdict.parse_error is not None)
        self.recall_sum += record.verdict.recall


class BenchmarkReport(BaseModel):
    """Success rates per catalog variant."""

    variants: dict[str, VariantStats]

    def header(self) -> list[str]:
        return ["", *self.variants]

    def rows(self) -> list[list[str]]:
        stats = list(self.variants.values())
        return [
            ["success", *[f"{s.success_rate:.2%}" for s in stats]],
            ["recall", *[f"{s.mean_recall:.2%}" for s in stats]],
            ["unparsed", *[str(s.parse_failures) for s in stats]],
            ["trials", *[str(s.trials) for s in stats]],
        ]


def run_benchmark(
    client: LlmClient,
    variants: Sequence[str],
    trials: int,
    images: Optional[Sequence[bytes]] = None,
    combinations: Optional[list[list[str]]] = None,
    parallelism: int = 1,
    log_path: Optional[str | Path] = None,
    full_locations: bool = False,
) -> BenchmarkReport:
    """
    Plan every ingredient combination `trials` times for each catalog variant.

    full_locations gives hidden-environment prompts the location of every
    ingredient instead of only the hidden ones.

    Trials are appended to log_path (JSON lines) as they complete, so a
    client failure leaves the finished trials on disk before it is re-raised.
    """
    combinations = combinations if combinations is not None else ingredient_combinations()
    log_lock = threading.Lock()
    log_file = open(log_path, "w", encoding="utf-8") if log_path is not None else None

    def run_trial(variant: str, ingredients: list[str], trial_index: int) -> TrialRecord:
        catalog = get_catalog(variant)
        template = template_for(catalog)
        task = default_task(ingredients, catalog, full_locations)
        plan, verdict = plan_task(client, task, catalog, template, images, trial_index)
        record = TrialRecord(
            variant=variant,
            template=template,
            ingredients=ingredients,
            trial_index=trial_index,
            keys=plan.keys,
            response=plan.raw_response,
            verdict=verdict,
        )
        if log_file is not None:
            with log_lock:
                log_file.write(json.dumps(record.model_dump()) + "\n")
                log_file.flush()
        return record

    jobs = [
        (variant, ingredients, ci * trials + t)
        for variant in variants
        for ci, ingredients in enumerate(combinations)
        for t in range(trials)
    ]
    report = BenchmarkReport(variants={variant: VariantStats() for variant in variants})

    try:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            futures = [pool.submit(run_trial, *job) for job in jobs]
            done, _ = wait(futures, return_when=FIRST_EXCEPTION)
            failed = [f for f in futures if f in done and f.exception() is not None]
            if failed:
                for future in futures:
                    future.cancel()
                logger.error("benchmark aborted: %s", failed[0].exception())
                raise failed[0].exception()  # type: ignore[misc]
            for future in futures:
                record = future.result()
                report.variants[record.variant].add(record)
    finally:
        if log_file is not None:
            log_file.close()

    return report


def label_skill(client: LlmClient, images: Sequence[bytes]) -> str:
    """Ask for a short action description of a skill's snapshot images."""
    return client.send(LABELING_PROMPT, images=images, metadata={"template": "labeling"}).strip()


def snapshot_indices(length: int, every: int = 10) -> list[int]:
    """Time steps at which a trajectory is photographed for labeling."""
    if every < 1:
        raise ValueError("every must be positive")
    return list(range(0, length, every))
