"""Small shared helpers: exact ceilings, canonical JSON, JSONL I/O."""

from __future__ import annotations

import hashlib
import json
import math
from fractions import Fraction
from pathlib import Path
from typing import Any, Iterable


def ceil_pct(percent: float, n: int) -> int:
    """Ceiling of (percent/100) * n in exact rational arithmetic.

    Avoids float artifacts like 0.75 * 4 rounding above 3.0 and then
    ceiling to 4.
    """
    return math.ceil(Fraction(percent) * n / 100)


def ceil_scale(factor: float, n: int) -> int:
    """Ceiling of factor * n, exact."""
    return math.ceil(Fraction(factor) * n)


def canonical_json(obj: Any) -> str:
    """Deterministic JSON encoding: sorted keys, compact separators."""
    return json.dumps(obj, sort_keys=True, ensure_ascii=False, separators=(",", ":"))


def sha256_hex(data: str | bytes) -> str:
    if isinstance(data, str):
        data = data.encode("utf-8")
    return hashlib.sha256(data).hexdigest()


def file_sha256(path: str | Path) -> str:
    return sha256_hex(Path(path).read_bytes())


def read_jsonl(path: str | Path) -> list[dict]:
    rows = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                rows.append(json.loads(line))
    return rows


def write_jsonl(path: str | Path, rows: Iterable[dict]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(canonical_json(row))
            fh.write("\n")


def write_json(path: str | Path, obj: Any) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(
        json.dumps(obj, sort_keys=True, ensure_ascii=False, indent=2) + "\n",
        encoding="utf-8",
    )
