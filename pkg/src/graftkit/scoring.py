"""Per-word grafting potential.

A word's potential is the class-conditioned logprob minus the
regularization logprob: how much naming the target class in the instruction
raises the word's likelihood. Both scoring calls teacher-force the full
original text after the instruction, so every word is conditioned on the
instruction plus all preceding original words. A word's logprob is the sum
(not mean) of its sub-token logprobs, making the difference a log-ratio of
word probabilities; a mean would penalize multi-token words inconsistently
between the two instructions.
"""

from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .backends import ScoredToken, ScoringBackend, ScoringRequest
from .corpus import Corpus, Document, Word, tokenize
from .errors import AlignmentError, BackendError, ConfigError, DataError
from .util import sha256_hex

logger = logging.getLogger(__name__)

CLASS_INSTRUCTION = "Please write a {class_name} {style}."
REGULARIZATION_INSTRUCTION = "Please write a {style}."


@dataclass(frozen=True)
class TaskSpec:
    """Target class plus the knobs of a mining run.

    ``k_percent`` is the fraction of words KEPT in a template (the realized
    mask ratio is 1 - k_percent/100); ``n_percent`` is the fraction of
    highest-potential templates selected for filling.
    """

    class_name: str
    style: str
    k_percent: float = 25.0
    n_percent: float = 10.0
    mask_token: str = "_"

    def __post_init__(self) -> None:
        if not self.class_name:
            raise ConfigError("class_name must be non-empty")
        if not self.style:
            raise ConfigError("style must be non-empty")
        if not 0 < self.k_percent <= 100:
            raise ConfigError("k_percent must be in (0,100]")
        if not 0 < self.n_percent <= 100:
            raise ConfigError("n_percent must be in (0,100]")
        if not self.mask_token:
            raise ConfigError("mask_token must be non-empty")
        parts = tokenize(self.mask_token)
        if len(parts) != 1 or parts[0].surface != self.mask_token:
            raise ConfigError(
                f"mask_token {self.mask_token!r} must survive tokenization as a single word"
            )


def build_prompts(task: TaskSpec) -> tuple[str, str]:
    """(class-conditioned instruction, regularization instruction)."""
    return (
        CLASS_INSTRUCTION.format(class_name=task.class_name, style=task.style),
        REGULARIZATION_INSTRUCTION.format(style=task.style),
    )


@dataclass(frozen=True)
class WordPotential:
    word_index: int
    delta_p: float
    logp_class: float
    logp_reg: float


def word_potential(word_index: int, logp_class: float, logp_reg: float) -> WordPotential:
    return WordPotential(
        word_index=word_index,
        delta_p=logp_class - logp_reg,
        logp_class=logp_class,
        logp_reg=logp_reg,
    )


def align_tokens_to_words(
    tokens: Sequence[ScoredToken], words: Sequence[Word]
) -> list[list[int]]:
    """Assign each model token to the word containing the token's first
    character that falls inside any word span.

    Sub-tokens of a word all land on that word; a token with a leading space
    (" cant") lands on the word it introduces; a token straddling two words
    lands on the word owning its first in-span character. Whitespace-only
    tokens stay unassigned. A word that ends up with zero tokens raises
    AlignmentError.
    """
    assigned: list[list[int]] = [[] for _ in words]
    wi = 0
    for ti, tok in enumerate(tokens):
        while wi < len(words) and words[wi].end <= tok.start:
            wi += 1
        if wi == len(words):
            break
        # words[wi] is the first word ending after tok.start, so the token's
        # first in-span character (tok.start, or word.start after a gap)
        # belongs to words[wi] iff the spans touch at all.
        if words[wi].start < tok.end:
            assigned[wi].append(ti)
    for idx, word in enumerate(words):
        if not assigned[idx]:
            raise AlignmentError(
                f"word {idx} ({word.surface!r} at {word.start}..{word.end}) "
                "has no aligned tokens"
            )
    return assigned


def word_potentials(
    doc: Document, task: TaskSpec, backend: ScoringBackend
) -> list[WordPotential]:
    """Score one document under both instructions and difference per word."""
    if not doc.words:
        raise DataError(f"document {doc.id!r} has no words")
    instruction_class, instruction_reg = build_prompts(task)
    tokens_class = backend.score(ScoringRequest(instruction_class, doc.text))
    tokens_reg = backend.score(ScoringRequest(instruction_reg, doc.text))
    map_class = align_tokens_to_words(tokens_class, doc.words)
    map_reg = align_tokens_to_words(tokens_reg, doc.words)
    out = []
    for j in range(len(doc.words)):
        logp_class = sum(tokens_class[t].logprob for t in map_class[j])
        logp_reg = sum(tokens_reg[t].logprob for t in map_reg[j])
        out.append(word_potential(j, logp_class, logp_reg))
    return out


@dataclass(frozen=True)
class DocumentScores:
    doc_id: str
    potentials: tuple[WordPotential, ...]


@dataclass(frozen=True)
class SkippedDocument:
    doc_id: str
    reason: str


def score_corpus(
    corpus: Corpus,
    task: TaskSpec,
    backend: ScoringBackend,
    parallelism: int = 4,
) -> tuple[list[DocumentScores], list[SkippedDocument]]:
    """Score every document; failures skip the document, never abort the run.

    Documents are scored concurrently up to ``parallelism`` but results are
    collected in corpus order, so output is deterministic regardless of
    completion order.
    """

    def one(doc: Document) -> DocumentScores | SkippedDocument:
        try:
            return DocumentScores(doc.id, tuple(word_potentials(doc, task, backend)))
        except (BackendError, AlignmentError, DataError) as exc:
            logger.warning("skipping document %s: %s", doc.id, exc)
            return SkippedDocument(doc.id, str(exc))

    with ThreadPoolExecutor(max_workers=max(1, parallelism)) as pool:
        results = list(pool.map(one, corpus.documents))
    scored = [r for r in results if isinstance(r, DocumentScores)]
    skipped = [r for r in results if isinstance(r, SkippedDocument)]
    return scored, skipped


# ---------------------------------------------------------------------------
# Serialization (scores.jsonl): one row per document, either
#   {"doc_id", "logp_class": [...], "logp_reg": [...], "delta_p": [...]}
# or, for documents the scorer had to skip,
#   {"doc_id", "skipped": "<reason>"}

def scores_to_row(scores: DocumentScores) -> dict:
    return {
        "doc_id": scores.doc_id,
        "logp_class": [p.logp_class for p in scores.potentials],
        "logp_reg": [p.logp_reg for p in scores.potentials],
        "delta_p": [p.delta_p for p in scores.potentials],
    }


def scores_from_row(row: dict) -> DocumentScores:
    potentials = []
    for j, (lc, lr, dp) in enumerate(zip(row["logp_class"], row["logp_reg"], row["delta_p"])):
        if dp != lc - lr:
            raise DataError(
                f"corrupt scores row for {row['doc_id']!r}: delta_p[{j}] != logp_class - logp_reg"
            )
        potentials.append(WordPotential(j, dp, lc, lr))
    return DocumentScores(row["doc_id"], tuple(potentials))


# ---------------------------------------------------------------------------
# Optional on-disk scoring cache, keyed by hash(model, instruction, text).
# Guarantees identical reruns never re-hit the backend.

class ScoreCache:
    def __init__(self, root: str | Path) -> None:
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    @staticmethod
    def key(model: str, instruction: str, text: str) -> str:
        return sha256_hex(json.dumps([model, instruction, text], ensure_ascii=False))

    def _path(self, key: str) -> Path:
        return self.root / key[:2] / f"{key}.json"

    def get(self, model: str, instruction: str, text: str) -> list[ScoredToken] | None:
        path = self._path(self.key(model, instruction, text))
        if not path.is_file():
            return None
        payload = json.loads(path.read_text(encoding="utf-8"))
        return [ScoredToken(**tok) for tok in payload["tokens"]]

    def put(self, model: str, instruction: str, text: str, tokens: list[ScoredToken]) -> None:
        path = self._path(self.key(model, instruction, text))
        path.parent.mkdir(parents=True, exist_ok=True)
        payload = {
            "tokens": [
                {"surface": t.surface, "logprob": t.logprob, "start": t.start, "end": t.end}
                for t in tokens
            ]
        }
        path.write_text(json.dumps(payload, ensure_ascii=False), encoding="utf-8")


class CachedScoringBackend:
    """Wrap a scoring backend with a ScoreCache."""

    def __init__(self, inner: ScoringBackend, cache: ScoreCache) -> None:
        self.inner = inner
        self.cache = cache
        self.model = inner.model

    def score(self, req: ScoringRequest) -> list[ScoredToken]:
        hit = self.cache.get(self.model, req.instruction, req.continuation)
        if hit is not None:
            return hit
        tokens = self.inner.score(req)
        self.cache.put(self.model, req.instruction, req.continuation, tokens)
        return tokens
