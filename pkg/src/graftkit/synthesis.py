"""Template filling: prompt the generation backend and validate the result.

The fill prompt is exactly three lines: the instruction, the rendered
template, and a fixed output-delimiting convention:

    Fill in the blanks in the template to produce a <class> <style>.
    <rendered template>
    Return only the completed text.

Validation is stricter than the generator: a fill is accepted only when no
mask token survives, every kept word reappears in order (the whole point of
grafting is that the raw text's skeleton is preserved), and the length stays
within a configurable band of the template length.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

from .backends import GenerationBackend, GenerationRequest
from .corpus import tokenize
from .errors import BackendError, DataError
from .scoring import TaskSpec
from .templating import Template

logger = logging.getLogger(__name__)

FILL_INSTRUCTION = "Fill in the blanks in the template to produce a {class_name} {style}."
OUTPUT_CONVENTION = "Return only the completed text."


@dataclass(frozen=True)
class GraftedText:
    text: str
    label: str
    origin_id: str
    template_potential: float | None
    attempts: int
    generator_meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.text:
            raise DataError("grafted text must be non-empty")
        if self.attempts < 1:
            raise DataError("attempts must be ≥ 1")


@dataclass(frozen=True)
class DroppedTemplate:
    origin_id: str
    reason: str


@dataclass(frozen=True)
class RetryPolicy:
    """Per-template fill budget plus the generation knobs it retries with.

    Each retry bumps the request seed by one so a deterministic backend does
    not repeat a failing completion verbatim.
    """

    max_attempts: int = 3
    max_tokens: int = 256
    temperature: float = 1.0
    seed: int | None = None


@dataclass(frozen=True)
class ValidationResult:
    ok: bool
    reason: str | None = None


def build_fill_prompt(template: Template, task: TaskSpec) -> str:
    if not template.slots:
        raise DataError("template has no slots")
    instruction = FILL_INSTRUCTION.format(class_name=task.class_name, style=task.style)
    return "\n".join([instruction, template.render(), OUTPUT_CONVENTION])


def validate_filled(
    template: Template,
    candidate: str,
    min_length_ratio: float = 0.5,
    max_length_ratio: float = 2.0,
) -> ValidationResult:
    """Accept a candidate fill iff (a) no mask token remains, (b) the kept
    surfaces appear in order (case-insensitive subsequence over word
    boundaries), and (c) the word count is within the length band."""
    if not candidate.strip():
        return ValidationResult(False, "empty")
    words = [w.surface for w in tokenize(candidate)]
    if any(w == template.mask_token for w in words):
        return ValidationResult(False, "mask-token-remains")
    folded = [w.casefold() for w in words]
    pos = 0
    for slot in template.slots:
        if slot.surface is None:
            continue
        target = slot.surface.casefold()
        while pos < len(folded) and folded[pos] != target:
            pos += 1
        if pos == len(folded):
            return ValidationResult(False, "kept-word-missing")
        pos += 1
    n_slots = len(template.slots)
    if not (min_length_ratio * n_slots <= len(words) <= max_length_ratio * n_slots):
        return ValidationResult(False, "length-out-of-band")
    return ValidationResult(True)


def fill_template(
    template: Template,
    task: TaskSpec,
    backend: GenerationBackend,
    policy: RetryPolicy = RetryPolicy(),
) -> GraftedText | DroppedTemplate:
    """First valid fill within the retry budget, or a DroppedTemplate."""
    prompt = build_fill_prompt(template, task)
    last_reason = "no attempts made"
    for attempt in range(1, policy.max_attempts + 1):
        seed = policy.seed + (attempt - 1) if policy.seed is not None else None
        request = GenerationRequest(
            instruction=prompt,
            max_tokens=policy.max_tokens,
            temperature=policy.temperature,
            seed=seed,
        )
        try:
            candidate = backend.generate(request)
        except BackendError as exc:
            last_reason = f"backend-error: {exc}"
            continue
        verdict = validate_filled(template, candidate)
        if verdict.ok:
            return GraftedText(
                text=candidate,
                label=task.class_name,
                origin_id=template.origin_id,
                template_potential=template.potential,
                attempts=attempt,
                generator_meta={
                    "model": backend.model,
                    "seed": seed,
                    "temperature": policy.temperature,
                },
            )
        last_reason = verdict.reason or "invalid"
    return DroppedTemplate(template.origin_id, last_reason)


def graft_run(
    templates: Sequence[Template],
    task: TaskSpec,
    backend: GenerationBackend,
    policy: RetryPolicy = RetryPolicy(),
    parallelism: int = 4,
) -> tuple[list[GraftedText], list[DroppedTemplate]]:
    """Fill every template; results keep template (rank) order.

    Drops are collected, never silent; losing more than half the templates
    signals a backend or prompt misconfiguration and logs a run-level
    warning.
    """
    if not templates:
        raise DataError("no templates to fill")
    with ThreadPoolExecutor(max_workers=max(1, parallelism)) as pool:
        results = list(pool.map(lambda t: fill_template(t, task, backend, policy), templates))
    grafted = [r for r in results if isinstance(r, GraftedText)]
    dropped = [r for r in results if isinstance(r, DroppedTemplate)]
    if dropped and len(dropped) * 2 > len(templates):
        logger.warning(
            "%d of %d templates dropped; check the generation backend and prompts",
            len(dropped),
            len(templates),
        )
    return grafted, dropped


# ---------------------------------------------------------------------------
# Serialization (grafted.jsonl)

def grafted_to_row(grafted: GraftedText) -> dict:
    return {
        "text": grafted.text,
        "label": grafted.label,
        "origin_id": grafted.origin_id,
        "template_potential": grafted.template_potential,
        "attempts": grafted.attempts,
        "generator_meta": grafted.generator_meta,
    }


def grafted_from_row(row: dict) -> GraftedText:
    return GraftedText(
        text=row["text"],
        label=row["label"],
        origin_id=row["origin_id"],
        template_potential=row["template_potential"],
        attempts=row["attempts"],
        generator_meta=dict(row.get("generator_meta") or {}),
    )
