"""Binary training-set assembly: positives from any producer, negatives
sampled from the raw corpus or taken from out-of-class synthesis, then a
stratified train/validation split.

Raw negatives may contain latent true positives (the minority class exists
in the corpus at a few percent); that label noise is inherent to the method
and accepted.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

from .baselines import MinedText
from .corpus import Corpus
from .errors import ConfigError, DataError
from .synthesis import GraftedText
from .util import ceil_scale, read_jsonl, write_json, write_jsonl

POSITIVE = "positive"
NEGATIVE = "negative"
LABELS = (NEGATIVE, POSITIVE)
PROVENANCES = ("grafted", "mined", "synthesized", "raw-negative")

STRATEGY_RAW = "raw-sample"
STRATEGY_SYNTH = "synthesized"


@dataclass(frozen=True)
class LabeledExample:
    text: str
    label: str
    provenance: str
    source_id: str | None = None

    def __post_init__(self) -> None:
        if not self.text:
            raise DataError("example text must be non-empty")
        if self.label not in LABELS:
            raise DataError(f"unknown label: {self.label!r}")
        if self.provenance not in PROVENANCES:
            raise DataError(f"unknown provenance: {self.provenance!r}")


@dataclass(frozen=True)
class DatasetBundle:
    train: tuple[LabeledExample, ...]
    validation: tuple[LabeledExample, ...]
    manifest: dict


def positives_from_generations(
    items: Iterable[GraftedText], provenance: str = "grafted"
) -> list[LabeledExample]:
    return [
        LabeledExample(g.text, POSITIVE, provenance, g.origin_id) for g in items
    ]


def positives_from_mined(items: Iterable[MinedText]) -> list[LabeledExample]:
    return [LabeledExample(m.text, POSITIVE, "mined", m.doc_id) for m in items]


def assemble(
    positives: Sequence[LabeledExample],
    corpus: Corpus,
    negative_strategy: str = STRATEGY_RAW,
    ratio: float = 1.0,
    seed: int = 0,
    synthesized_negatives: Sequence[GraftedText] | None = None,
) -> list[LabeledExample]:
    """Combine positives with ceil(ratio * |positives|) negatives.

    The raw-sample strategy draws uniformly (seeded) from corpus documents
    whose id is not among the positive origins; the synthesized strategy
    consumes out-of-class generations. A text occurring under both labels is
    contradictory supervision and raises.
    """
    if not positives:
        raise DataError("positives must be non-empty")
    if any(p.label != POSITIVE for p in positives):
        raise DataError("assemble expects only positive examples as input")
    if ratio <= 0:
        raise DataError("ratio must be > 0")
    need = ceil_scale(ratio, len(positives))

    negatives: list[LabeledExample]
    if negative_strategy == STRATEGY_RAW:
        origins = {p.source_id for p in positives if p.source_id}
        pool = [d for d in corpus.documents if d.id not in origins and d.text.strip()]
        if len(pool) < need:
            raise DataError(
                f"corpus too small for {need} raw negatives: "
                f"only {len(pool)} eligible documents ({need - len(pool)} short)"
            )
        picked = sorted(random.Random(seed).sample(range(len(pool)), need))
        negatives = [
            LabeledExample(pool[i].text, NEGATIVE, "raw-negative", pool[i].id)
            for i in picked
        ]
    elif negative_strategy == STRATEGY_SYNTH:
        if synthesized_negatives is None:
            raise DataError("synthesized negative strategy requires synthesized_negatives")
        if len(synthesized_negatives) < need:
            raise DataError(
                f"need {need} synthesized negatives but only "
                f"{len(synthesized_negatives)} were provided"
            )
        negatives = [
            LabeledExample(c.text, NEGATIVE, "synthesized", c.origin_id)
            for c in synthesized_negatives[:need]
        ]
    else:
        raise DataError(f"unknown negative strategy: {negative_strategy!r}")

    positive_texts = {p.text for p in positives}
    for n in negatives:
        if n.text in positive_texts:
            raise DataError(
                "text appears under both labels (contradictory supervision): "
                f"{n.text[:60]!r}"
            )
    return list(positives) + negatives


def _validation_target(fraction: float, n: int) -> int:
    # half-up rounding via exact rationals, clamped so both sides stay
    # non-empty per label
    target = int(Fraction(fraction) * n + Fraction(1, 2))
    return min(max(target, 1), n - 1)


def split(
    examples: Sequence[LabeledExample],
    validation_fraction: float,
    seed: int,
) -> DatasetBundle:
    """Stratified split, deterministic under seed.

    Duplicate texts travel together (train and validation must be disjoint
    by text identity), so per-label balance is within ±1 whenever texts are
    unique.
    """
    if not 0 < validation_fraction < 1:
        raise ConfigError("validation_fraction must be in (0,1)")
    by_label: dict[str, list[LabeledExample]] = {label: [] for label in LABELS}
    for ex in examples:
        by_label[ex.label].append(ex)

    validation_texts: set[str] = set()
    for label in LABELS:
        group = by_label[label]
        if len(group) < 2:
            raise DataError(f'label "{label}" has only {len(group)} examples; need at least 2')
        texts: list[str] = []
        seen: set[str] = set()
        for ex in group:
            if ex.text not in seen:
                seen.add(ex.text)
                texts.append(ex.text)
        rng = random.Random(f"graftkit-split|{seed}|{label}")
        rng.shuffle(texts)
        target = _validation_target(validation_fraction, len(group))
        picked = 0
        for text in texts:
            if picked >= target:
                break
            members = sum(1 for ex in group if ex.text == text)
            if picked + members > len(group) - 1:
                continue  # keep at least one training example for the label
            validation_texts.add(text)
            picked += members

    train = tuple(ex for ex in examples if ex.text not in validation_texts)
    validation = tuple(ex for ex in examples if ex.text in validation_texts)

    manifest = {
        "counts": {
            "train": len(train),
            "validation": len(validation),
            "by_label": {
                "train": _label_counts(train),
                "validation": _label_counts(validation),
            },
            "by_provenance": _provenance_counts(train + validation),
        },
        "validation_fraction": validation_fraction,
        "split_seed": seed,
    }
    return DatasetBundle(train=train, validation=validation, manifest=manifest)


def _label_counts(examples: Sequence[LabeledExample]) -> dict[str, int]:
    return {label: sum(1 for ex in examples if ex.label == label) for label in LABELS}


def _provenance_counts(examples: Sequence[LabeledExample]) -> dict[str, int]:
    counts = {p: 0 for p in PROVENANCES}
    for ex in examples:
        counts[ex.provenance] += 1
    return {p: c for p, c in counts.items() if c}


# ---------------------------------------------------------------------------
# On-disk bundle: train.jsonl / validation.jsonl / manifest.json, the sole
# contract with the evaluation harness.

def example_to_row(ex: LabeledExample) -> dict:
    return {
        "text": ex.text,
        "label": ex.label,
        "provenance": ex.provenance,
        "source_id": ex.source_id,
    }


def example_from_row(row: dict) -> LabeledExample:
    return LabeledExample(
        text=row["text"],
        label=row["label"],
        provenance=row["provenance"],
        source_id=row.get("source_id"),
    )


def save_bundle(bundle: DatasetBundle, directory: str | Path) -> None:
    directory = Path(directory)
    write_jsonl(directory / "train.jsonl", (example_to_row(ex) for ex in bundle.train))
    write_jsonl(
        directory / "validation.jsonl", (example_to_row(ex) for ex in bundle.validation)
    )
    write_json(directory / "manifest.json", bundle.manifest)


def load_bundle(directory: str | Path) -> DatasetBundle:
    directory = Path(directory)
    train = tuple(example_from_row(r) for r in read_jsonl(directory / "train.jsonl"))
    validation = tuple(
        example_from_row(r) for r in read_jsonl(directory / "validation.jsonl")
    )
    manifest = json.loads((directory / "manifest.json").read_text(encoding="utf-8"))
    overlap = {ex.text for ex in train} & {ex.text for ex in validation}
    if overlap:
        raise DataError(f"train/validation overlap on {len(overlap)} text(s)")
    return DatasetBundle(train=train, validation=validation, manifest=manifest)
