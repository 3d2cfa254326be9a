"""Raw-corpus loading, word segmentation, and deterministic subsampling.

Documents are immutable after construction; gold labels found in the input
(e.g. a ``label`` key) are kept in ``Document.meta`` for evaluation only and
are never read by the mining or synthesis stages.
"""

from __future__ import annotations

import importlib.resources
import json
import random
import unicodedata
from dataclasses import dataclass, field
from pathlib import Path

from .errors import DataError

FORMATS = ("jsonl", "plain-lines")


def _is_punct(ch: str) -> bool:
    return unicodedata.category(ch).startswith("P")


def is_punctuation_word(surface: str) -> bool:
    """True when a word consists entirely of punctuation characters."""
    return bool(surface) and all(_is_punct(ch) for ch in surface)


@dataclass(frozen=True)
class Word:
    surface: str
    start: int
    end: int


@dataclass(frozen=True)
class Document:
    id: str
    text: str
    words: tuple[Word, ...]
    meta: dict[str, str] = field(default_factory=dict)

    @classmethod
    def from_text(cls, doc_id: str, text: str, meta: dict[str, str] | None = None) -> "Document":
        return cls(id=doc_id, text=text, words=tuple(tokenize(text)), meta=dict(meta or {}))


@dataclass(frozen=True)
class Corpus:
    documents: tuple[Document, ...]
    source_path: str

    def __post_init__(self) -> None:
        seen: set[str] = set()
        for doc in self.documents:
            if doc.id in seen:
                raise DataError(f"duplicate document id: {doc.id!r}")
            seen.add(doc.id)

    def __len__(self) -> int:
        return len(self.documents)

    def ids(self) -> list[str]:
        return [doc.id for doc in self.documents]


def tokenize(text: str) -> list[Word]:
    """Whitespace segmentation with leading/trailing punctuation peeled off
    into single-character words. Spans cover every non-whitespace character
    and satisfy ``surface == text[start:end]``.
    """
    words: list[Word] = []
    i, n = 0, len(text)
    while i < n:
        if text[i].isspace():
            i += 1
            continue
        j = i
        while j < n and not text[j].isspace():
            j += 1
        words.extend(_split_chunk(text, i, j))
        i = j
    return words


def _split_chunk(text: str, start: int, end: int) -> list[Word]:
    lead: list[Word] = []
    trail: list[Word] = []
    s, e = start, end
    while s < e and _is_punct(text[s]):
        lead.append(Word(text[s], s, s + 1))
        s += 1
    while e > s and _is_punct(text[e - 1]):
        trail.append(Word(text[e - 1], e - 1, e))
        e -= 1
    mid = [Word(text[s:e], s, e)] if s < e else []
    return lead + mid + list(reversed(trail))


def ingest(path: str | Path, format: str = "jsonl") -> Corpus:
    """Load a corpus file. Line numbers (and therefore synthesized ids of the
    form ``<stem>:<line>``) are zero-based.
    """
    if format not in FORMATS:
        raise DataError(f"unknown corpus format: {format!r} (expected one of {FORMATS})")
    path = Path(path)
    if not path.is_file():
        raise DataError(f"corpus file not found: {path}")
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines:
        raise DataError(f"{path}: empty file")

    stem = path.stem
    documents: list[Document] = []
    if format == "plain-lines":
        for lineno, line in enumerate(lines):
            documents.append(Document.from_text(f"{stem}:{lineno}", line))
    else:
        for lineno, line in enumerate(lines):
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}: line {lineno}: invalid JSON: {exc.msg}") from exc
            if not isinstance(record, dict):
                raise DataError(f"{path}: line {lineno}: record is not an object")
            if "text" not in record:
                raise DataError(f"{path}: line {lineno}: missing field text")
            text = record["text"]
            if not isinstance(text, str):
                raise DataError(f"{path}: line {lineno}: field text is not a string")
            doc_id = str(record["id"]) if "id" in record else f"{stem}:{lineno}"
            meta = {"label": str(record["label"])} if "label" in record else None
            documents.append(Document.from_text(doc_id, text, meta))
    return Corpus(documents=tuple(documents), source_path=str(path))


def downsample(corpus: Corpus, n: int, seed: int) -> Corpus:
    """Keep min(n, |corpus|) documents chosen uniformly without replacement.

    Deterministic for a fixed seed; survivors keep their original order.
    """
    if n < 1:
        raise DataError("n must be ≥ 1")
    if n >= len(corpus):
        return corpus
    picked = sorted(random.Random(seed).sample(range(len(corpus)), n))
    return Corpus(
        documents=tuple(corpus.documents[i] for i in picked),
        source_path=corpus.source_path,
    )


def toy_corpus_path() -> Path:
    """Path of the bundled 200-document toy corpus."""
    return Path(str(importlib.resources.files("graftkit") / "data" / "toy_corpus.jsonl"))
