"""Comparison methods and ablations: alternative producers of labeled
positives that share the corpus, task, and backend contracts.

The yes/no membership prompt used by prompting-confidence mining is fixed
here verbatim so results stay comparable across backends.
"""

from __future__ import annotations

import logging
import math
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

from .backends import GenerationBackend, GenerationRequest, ScoringBackend, ScoringRequest
from .corpus import Corpus, Document
from .errors import BackendError, DataError
from .scoring import DocumentScores, SkippedDocument, TaskSpec, build_prompts, score_corpus
from .synthesis import GraftedText, RetryPolicy
from .templating import template_potential
from .util import ceil_pct

logger = logging.getLogger(__name__)

PROMPT_CONFIDENCE_INSTRUCTION = (
    "Text: {text}\n"
    'Question: Does this text belong to the class "{class_name}"? Answer yes or no.\n'
    "Answer:"
)
AFFIRMATIVE_CONTINUATION = "yes"

METHOD_PROMPT_CONFIDENCE = "prompt_confidence"
METHOD_DCPMI = "dcpmi"


@dataclass(frozen=True)
class MinedText:
    doc_id: str
    text: str
    score: float
    method: str

    def __post_init__(self) -> None:
        if not math.isfinite(self.score):
            raise DataError(f"non-finite mining score for {self.doc_id!r}")


def _take_top(
    scored: list[tuple[str, str, float]], corpus_size: int, rate_percent: float, method: str
) -> list[MinedText]:
    count = min(ceil_pct(rate_percent, corpus_size), len(scored))
    ranked = sorted(scored, key=lambda item: (-item[2], item[0]))
    return [MinedText(doc_id, text, score, method) for doc_id, text, score in ranked[:count]]


def prompt_confidence_mine(
    corpus: Corpus,
    task: TaskSpec,
    backend: ScoringBackend,
    rate_percent: float = 1.0,
    parallelism: int = 4,
) -> tuple[list[MinedText], list[SkippedDocument]]:
    """Rank documents by the logprob of answering "yes" to a membership
    question and keep the top rate_percent%. Ties break by doc id."""
    if not 0 < rate_percent <= 100:
        raise DataError("rate_percent must be in (0,100]")

    def one(doc: Document) -> tuple[str, str, float] | SkippedDocument:
        instruction = PROMPT_CONFIDENCE_INSTRUCTION.format(
            text=doc.text, class_name=task.class_name
        )
        try:
            tokens = backend.score(ScoringRequest(instruction, AFFIRMATIVE_CONTINUATION))
        except BackendError as exc:
            logger.warning("skipping document %s: %s", doc.id, exc)
            return SkippedDocument(doc.id, str(exc))
        return doc.id, doc.text, sum(t.logprob for t in tokens)

    with ThreadPoolExecutor(max_workers=max(1, parallelism)) as pool:
        results = list(pool.map(one, corpus.documents))
    scored = [r for r in results if not isinstance(r, SkippedDocument)]
    skipped = [r for r in results if isinstance(r, SkippedDocument)]
    return _take_top(scored, len(corpus), rate_percent, METHOD_PROMPT_CONFIDENCE), skipped


def dcpmi_rank(
    scored: Sequence[DocumentScores], corpus: Corpus, rate_percent: float
) -> list[MinedText]:
    """Rank already-scored documents by mean word potential over ALL words."""
    texts = {doc.id: doc.text for doc in corpus.documents}
    items = [
        (ds.doc_id, texts[ds.doc_id], template_potential(ds.potentials, 100.0)[0])
        for ds in scored
    ]
    return _take_top(items, len(corpus), rate_percent, METHOD_DCPMI)


def dcpmi_mine(
    corpus: Corpus,
    task: TaskSpec,
    backend: ScoringBackend,
    rate_percent: float = 1.0,
    parallelism: int = 4,
) -> tuple[list[MinedText], list[SkippedDocument]]:
    """Mine raw texts directly by mean word potential over ALL words.

    By construction this score equals the template potential at K=100, so
    this baseline is exactly the pipeline without masking or filling.
    """
    if not 0 < rate_percent <= 100:
        raise DataError("rate_percent must be in (0,100]")
    scores, skipped = score_corpus(corpus, task, backend, parallelism)
    return dcpmi_rank(scores, corpus, rate_percent), skipped


# ---------------------------------------------------------------------------
# Pure data synthesis baselines

def _generate_with_retries(
    backend: GenerationBackend,
    instruction: str,
    policy: RetryPolicy,
    base_seed: int,
) -> tuple[str, int, int] | None:
    """(text, attempts, seed_used) or None when every attempt came back empty."""
    for attempt in range(1, policy.max_attempts + 1):
        seed = base_seed + (attempt - 1)
        try:
            text = backend.generate(
                GenerationRequest(
                    instruction=instruction,
                    max_tokens=policy.max_tokens,
                    temperature=policy.temperature,
                    seed=seed,
                )
            )
        except BackendError as exc:
            logger.warning("generation attempt %d failed: %s", attempt, exc)
            continue
        if text.strip():
            return text, attempt, seed
    return None


def zerogen_generate(
    task: TaskSpec,
    backend: GenerationBackend,
    count: int,
    polarity: str = "in-class",
    policy: RetryPolicy = RetryPolicy(),
) -> list[GraftedText]:
    """Direct instruction-only synthesis, no template involved.

    ``polarity`` picks between the class-conditioned instruction and the
    plain style instruction (out-of-class negatives).
    """
    if count < 1:
        raise DataError("count must be ≥ 1")
    if polarity not in ("in-class", "out-of-class"):
        raise DataError(f"unknown polarity: {polarity!r}")
    instruction_class, instruction_reg = build_prompts(task)
    in_class = polarity == "in-class"
    instruction = instruction_class if in_class else instruction_reg
    label = task.class_name if in_class else f"not:{task.class_name}"
    base = policy.seed if policy.seed is not None else 0
    out: list[GraftedText] = []
    for i in range(count):
        result = _generate_with_retries(
            backend, instruction, policy, base + i * policy.max_attempts
        )
        if result is None:
            logger.warning("dropping empty zerogen generation %d (%s)", i, polarity)
            continue
        text, attempts, seed = result
        out.append(
            GraftedText(
                text=text,
                label=label,
                origin_id=f"zerogen:{polarity}:{i:04d}",
                template_potential=None,
                attempts=attempts,
                generator_meta={
                    "model": backend.model,
                    "seed": seed,
                    "temperature": policy.temperature,
                    "polarity": polarity,
                },
            )
        )
    return out


ICG_PREAMBLE = "Here are some examples of the target writing style:"


def build_icg_prompt(exemplars: Sequence[Document], instruction: str) -> str:
    lines = [ICG_PREAMBLE]
    lines.extend(
        f"Example {i + 1}: {doc.text}" for i, doc in enumerate(exemplars)
    )
    lines.append(instruction)
    return "\n".join(lines)


def icg_generate(
    task: TaskSpec,
    backend: GenerationBackend,
    corpus: Corpus | Sequence[Document],
    count: int,
    examples_per_prompt: int = 3,
    seed: int = 0,
    polarity: str = "in-class",
    policy: RetryPolicy = RetryPolicy(),
) -> list[GraftedText]:
    """In-context generation: each prompt embeds seeded raw-text exemplars.

    Feeding this the origin documents of the selected templates gives the
    mask-filling-to-ICG ablation; feeding it the whole corpus gives the
    plain in-context generation baseline.
    """
    docs = corpus.documents if isinstance(corpus, Corpus) else tuple(corpus)
    if not docs:
        raise DataError("exemplar pool is empty")
    if count < 1:
        raise DataError("count must be ≥ 1")
    instruction_class, instruction_reg = build_prompts(task)
    in_class = polarity == "in-class"
    instruction = instruction_class if in_class else instruction_reg
    label = task.class_name if in_class else f"not:{task.class_name}"
    rng = random.Random(f"graftkit-icg|{seed}|{polarity}")
    base = policy.seed if policy.seed is not None else 0
    out: list[GraftedText] = []
    for i in range(count):
        exemplars = rng.sample(list(docs), min(examples_per_prompt, len(docs)))
        prompt = build_icg_prompt(exemplars, instruction)
        result = _generate_with_retries(backend, prompt, policy, base + i * policy.max_attempts)
        if result is None:
            logger.warning("dropping empty icg generation %d (%s)", i, polarity)
            continue
        text, attempts, seed_used = result
        out.append(
            GraftedText(
                text=text,
                label=label,
                origin_id=f"icg:{polarity}:{i:04d}",
                template_potential=None,
                attempts=attempts,
                generator_meta={
                    "model": backend.model,
                    "seed": seed_used,
                    "temperature": policy.temperature,
                    "polarity": polarity,
                    "exemplar_ids": [d.id for d in exemplars],
                },
            )
        )
    return out


# ---------------------------------------------------------------------------
# Serialization (mined.jsonl)

def mined_to_row(mined: MinedText) -> dict:
    return {
        "doc_id": mined.doc_id,
        "text": mined.text,
        "score": mined.score,
        "method": mined.method,
    }


def mined_from_row(row: dict) -> MinedText:
    return MinedText(row["doc_id"], row["text"], row["score"], row["method"])
