"""Masked-template creation, template potential, and top-N% selection.

A template keeps the words with the highest grafting potential and replaces
every other word with one mask token (runs of masked words are never
collapsed, so the filler sees the original length skeleton). The template's
own potential is the arithmetic mean of the kept words' potentials; ranking
by that mean and keeping the top N% is the selection step of mining.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Sequence

from .corpus import Document, is_punctuation_word
from .errors import DataError
from .scoring import TaskSpec, WordPotential
from .util import ceil_pct

DEFAULT_MASK_TOKEN = "_"


@dataclass(frozen=True)
class Slot:
    """One position of a template: a kept word, or a blank (surface None)."""

    word_index: int
    surface: str | None

    @property
    def kept(self) -> bool:
        return self.surface is not None


@dataclass(frozen=True)
class Template:
    origin_id: str
    slots: tuple[Slot, ...]
    potential: float
    kept_count: int
    k_percent: float
    mask_token: str = DEFAULT_MASK_TOKEN

    def render(self) -> str:
        return " ".join(
            slot.surface if slot.surface is not None else self.mask_token
            for slot in self.slots
        )

    @property
    def kept_indices(self) -> tuple[int, ...]:
        return tuple(slot.word_index for slot in self.slots if slot.kept)

    @property
    def blank_count(self) -> int:
        return sum(1 for slot in self.slots if not slot.kept)


def template_potential(
    potentials: Sequence[WordPotential], k_percent: float
) -> tuple[float, tuple[int, ...]]:
    """Mean potential of the top-K% words, with the kept word indices.

    m = ceil(k_percent/100 * n) words are kept; ties in potential break
    toward the earlier word index so runs are deterministic. The kept
    values are summed in word order before dividing, so equal inputs give
    bitwise-equal means.
    """
    if not potentials:
        raise DataError("cannot compute a template potential for an empty word list")
    entries = sorted(potentials, key=lambda p: p.word_index)
    m = ceil_pct(k_percent, len(entries))
    ranked = sorted(range(len(entries)), key=lambda i: (-entries[i].delta_p, i))[:m]
    kept = tuple(sorted(entries[i].word_index for i in ranked))
    kept_positions = sorted(ranked)
    mean = sum(entries[i].delta_p for i in kept_positions) / m
    return mean, kept


def _check_coverage(doc: Document, potentials: Sequence[WordPotential]) -> None:
    indices = sorted(p.word_index for p in potentials)
    if indices != list(range(len(doc.words))):
        raise DataError(
            f"potentials do not cover document {doc.id!r}: "
            f"{len(potentials)} entries for {len(doc.words)} words"
        )


def _build(
    doc: Document,
    kept: Sequence[int],
    potential: float,
    task: TaskSpec,
    exempt_punctuation: bool,
) -> Template:
    kept_set = set(kept)
    if exempt_punctuation:
        kept_set |= {
            j for j, w in enumerate(doc.words) if is_punctuation_word(w.surface)
        }
    slots = tuple(
        Slot(j, word.surface if j in kept_set else None)
        for j, word in enumerate(doc.words)
    )
    return Template(
        origin_id=doc.id,
        slots=slots,
        potential=potential,
        kept_count=len(kept_set),
        k_percent=task.k_percent,
        mask_token=task.mask_token,
    )


def create_template(
    doc: Document,
    potentials: Sequence[WordPotential],
    task: TaskSpec,
    exempt_punctuation: bool = False,
) -> Template:
    """Keep the top-K% potential words, mask the rest (one mask per word)."""
    _check_coverage(doc, potentials)
    potential, kept = template_potential(potentials, task.k_percent)
    return _build(doc, kept, potential, task, exempt_punctuation)


def random_mask_template(
    doc: Document,
    potentials: Sequence[WordPotential],
    task: TaskSpec,
    seed: int,
    exempt_punctuation: bool = False,
) -> Template:
    """Ablation variant: same kept count, kept indices drawn uniformly.

    The template potential is carried over from the potential-based score so
    selection is unchanged; only the masking is randomized.
    """
    _check_coverage(doc, potentials)
    potential, _ = template_potential(potentials, task.k_percent)
    m = ceil_pct(task.k_percent, len(doc.words))
    rng = random.Random(f"graftkit-randmask|{seed}|{doc.id}")
    kept = sorted(rng.sample(range(len(doc.words)), m))
    return _build(doc, kept, potential, task, exempt_punctuation)


def rank_and_select(
    templates: Sequence[Template],
    n_percent: float,
    max_count: int | None = None,
) -> list[Template]:
    """Top-ceil(n_percent% * count) templates by potential, descending.

    Ties break by origin_id lexicographic order. ``max_count`` optionally
    caps the selection size (template-count sweeps).
    """
    if not templates:
        raise DataError("no templates to select from")
    count = ceil_pct(n_percent, len(templates))
    if max_count is not None:
        count = min(count, max_count)
    ranked = sorted(templates, key=lambda t: (-t.potential, t.origin_id))
    return ranked[:count]


def random_select(
    templates: Sequence[Template],
    n_percent: float,
    seed: int,
    max_count: int | None = None,
) -> list[Template]:
    """Ablation variant: a uniformly random subset of the same size
    rank_and_select would return, in potential order."""
    if not templates:
        raise DataError("no templates to select from")
    count = ceil_pct(n_percent, len(templates))
    if max_count is not None:
        count = min(count, max_count)
    rng = random.Random(f"graftkit-randselect|{seed}")
    chosen = rng.sample(list(templates), count)
    return sorted(chosen, key=lambda t: (-t.potential, t.origin_id))


# ---------------------------------------------------------------------------
# Serialization (templates.jsonl / selected.jsonl): the contract between the
# mining and synthesis stages.

def template_to_row(template: Template) -> dict:
    return {
        "origin_id": template.origin_id,
        "rendered": template.render(),
        "kept_indices": list(template.kept_indices),
        "potential": template.potential,
        "k_percent": template.k_percent,
    }


def template_from_row(row: dict) -> Template:
    parts = row["rendered"].split(" ")
    kept = set(row["kept_indices"])
    blanks = [j for j in range(len(parts)) if j not in kept]
    mask_token = parts[blanks[0]] if blanks else DEFAULT_MASK_TOKEN
    slots = tuple(
        Slot(j, parts[j] if j in kept else None) for j in range(len(parts))
    )
    return Template(
        origin_id=row["origin_id"],
        slots=slots,
        potential=row["potential"],
        kept_count=len(kept),
        k_percent=row["k_percent"],
        mask_token=mask_token,
    )
