"""Loading and schema validation for dataset bundles and gold test files.

A bundle directory is the file contract produced by the data-synthesis
pipeline: train.jsonl and validation.jsonl with {text, label, ...} rows plus
a manifest.json. Test files carry gold {text, label}. Labels are the strings
"positive" / "negative". All schema problems are raised before any training
starts.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

LABELS = ("negative", "positive")


class SchemaError(ValueError):
    """Input file does not conform to the bundle/test schema."""


@dataclass(frozen=True)
class Example:
    text: str
    label: int  # 0 = negative, 1 = positive


def _parse_row(row: dict, where: str) -> Example:
    text = row.get("text")
    if not isinstance(text, str) or not text:
        raise SchemaError(f"{where}: field 'text' must be a non-empty string")
    label = row.get("label")
    if label not in LABELS:
        raise SchemaError(f"{where}: field 'label' must be one of {LABELS}, got {label!r}")
    return Example(text=text, label=LABELS.index(label))


def load_examples(path: str | Path) -> list[Example]:
    path = Path(path)
    if not path.is_file():
        raise SchemaError(f"file not found: {path}")
    examples = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"{path}: line {lineno}: invalid JSON: {exc.msg}") from exc
            if not isinstance(row, dict):
                raise SchemaError(f"{path}: line {lineno}: record is not an object")
            examples.append(_parse_row(row, f"{path}: line {lineno}"))
    if not examples:
        raise SchemaError(f"{path}: no examples")
    return examples


@dataclass(frozen=True)
class Bundle:
    train: list[Example]
    validation: list[Example]
    manifest_hash: str


def load_bundle(bundle_dir: str | Path) -> Bundle:
    bundle_dir = Path(bundle_dir)
    manifest_path = bundle_dir / "manifest.json"
    if not manifest_path.is_file():
        raise SchemaError(f"bundle manifest not found: {manifest_path}")
    train = load_examples(bundle_dir / "train.jsonl")
    validation = load_examples(bundle_dir / "validation.jsonl")
    for name, part in (("train", train), ("validation", validation)):
        if len({e.label for e in part}) < 2:
            raise SchemaError(f"{bundle_dir}/{name}.jsonl: needs both labels present")
    digest = hashlib.sha256(manifest_path.read_bytes()).hexdigest()
    return Bundle(train=train, validation=validation, manifest_hash=digest)
