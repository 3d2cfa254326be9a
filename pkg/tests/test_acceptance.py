"""Acceptance suite: one test per release criterion, printed pass/fail lines.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
report. Every tolerance is pinned here; none of these tests may be loosened.
"""

from __future__ import annotations

import json
import math
import random
import time
from fractions import Fraction
from itertools import combinations
from pathlib import Path

import pytest

from graftkit.backends import MockScoringBackend, ScoredToken, ScoringRequest
from graftkit.baselines import dcpmi_mine
from graftkit.cli import main as cli_main
from graftkit.corpus import ingest, toy_corpus_path
from graftkit.scoring import TaskSpec, WordPotential, build_prompts, score_corpus
from graftkit.templating import (
    Slot,
    Template,
    create_template,
    rank_and_select,
    template_from_row,
    template_potential,
)
from graftkit.synthesis import validate_filled
from graftkit.util import read_jsonl

SEED_SCORER = 7
SEED_WRITER = 11


def _passed(name: str) -> None:
    print(f"[ACCEPTANCE PASS] {name}")


def graft_config(out_dir: Path) -> dict:
    return {
        "corpus": {"path": str(toy_corpus_path()), "format": "jsonl"},
        "task": {"class_name": "Surprised", "style": "Tweet", "k_percent": 25.0, "n_percent": 10.0},
        "method": "graft",
        "scoring_backend": {"kind": "mock", "model": "mock-scorer", "seed": SEED_SCORER},
        "generation_backend": {"kind": "mock", "model": "mock-writer", "seed": SEED_WRITER},
        "output_dir": str(out_dir),
    }


def run_cli(config: dict, tmp: Path, name: str) -> Path:
    path = tmp / f"{name}.json"
    path.write_text(json.dumps(config), encoding="utf-8")
    assert cli_main(["run", "--config", str(path)]) == 0
    return Path(config["output_dir"])


@pytest.fixture(scope="module")
def toy():
    return ingest(toy_corpus_path(), "jsonl")


@pytest.fixture(scope="module")
def task():
    return TaskSpec(class_name="Surprised", style="Tweet", k_percent=25.0, n_percent=10.0)


@pytest.fixture(scope="module")
def graft_dir(tmp_path_factory) -> Path:
    tmp = tmp_path_factory.mktemp("acceptance-graft")
    return run_cli(graft_config(tmp / "run"), tmp, "graft")


COMPARED_ARTIFACTS = (
    "templates.jsonl",
    "selected.jsonl",
    "grafted.jsonl",
    "dataset/train.jsonl",
    "dataset/validation.jsonl",
    "dataset/manifest.json",
)


def test_determinism_two_full_runs_byte_identical(tmp_path):
    """Two graft runs, same seeds, different directories: identical bytes,
    under 60 seconds total."""
    started = time.perf_counter()
    dir_a = run_cli(graft_config(tmp_path / "a"), tmp_path, "a")
    dir_b = run_cli(graft_config(tmp_path / "b"), tmp_path, "b")
    elapsed = time.perf_counter() - started
    for name in COMPARED_ARTIFACTS:
        bytes_a = (dir_a / name).read_bytes()
        bytes_b = (dir_b / name).read_bytes()
        assert bytes_a == bytes_b, f"{name} differs between identical runs"
    assert elapsed < 60.0, f"two runs took {elapsed:.1f}s"
    _passed(f"determinism: byte-identical artifacts in {elapsed:.1f}s")


def _oracle_word_sums(tokens: list[ScoredToken], words) -> list[float]:
    """Independent alignment + summing: a token belongs to the word owning
    its first in-span character (naive quadratic scan)."""
    sums = [0.0] * len(words)
    for tok in tokens:
        owner = None
        for pos in range(tok.start, tok.end):
            for wi, word in enumerate(words):
                if word.start <= pos < word.end:
                    owner = wi
                    break
            if owner is not None:
                break
        if owner is not None:
            sums[owner] += tok.logprob
    return sums


def test_word_potential_oracle_on_fifty_docs(graft_dir, toy, task):
    """Stored delta_p matches an independent recomputation from raw mock
    responses to 1e-9, for every word of a 50-document sample."""
    stored = {row["doc_id"]: row for row in read_jsonl(graft_dir / "scores.jsonl")}
    backend = MockScoringBackend(seed=SEED_SCORER, model="mock-scorer")
    instruction_class, instruction_reg = build_prompts(task)
    checked_words = 0
    for doc in toy.documents[:50]:
        tokens_class = backend.score(ScoringRequest(instruction_class, doc.text))
        tokens_reg = backend.score(ScoringRequest(instruction_reg, doc.text))
        sums_class = _oracle_word_sums(tokens_class, doc.words)
        sums_reg = _oracle_word_sums(tokens_reg, doc.words)
        row = stored[doc.id]
        assert len(row["delta_p"]) == len(doc.words)
        for j in range(len(doc.words)):
            expected = sums_class[j] - sums_reg[j]
            assert abs(row["delta_p"][j] - expected) <= 1e-9
            checked_words += 1
    assert checked_words > 500
    _passed(f"word potential oracle: {checked_words} words within 1e-9")


def test_template_potential_bruteforce_and_kept_counts():
    """Exact equality with subset enumeration on <=12-word documents, the
    kept-count formula across K, and the 0.75 mask ratio at K=25 on 40
    words."""
    rng = random.Random(404)
    trials = 0
    for _ in range(300):
        n = rng.randint(1, 12)
        values = [rng.randint(-10240, 10240) / 1024 for _ in range(n)]
        k = rng.choice([12.5, 25.0, 34.0, 50.0, 66.7, 75.0, 100.0])
        potentials = [WordPotential(i, v, v, 0.0) for i, v in enumerate(values)]
        potential, kept = template_potential(potentials, k)
        m = math.ceil(Fraction(k) * n / 100)
        assert len(kept) == m
        best_sum = max(sum(values[i] for i in c) for c in combinations(range(n), m))
        assert sum(values[i] for i in kept) == best_sum
        assert potential == sum(values[i] for i in sorted(kept)) / m
        trials += 1
    for k in (25, 50, 75, 100):
        for n in (1, 4, 11, 40, 53):
            potentials = [WordPotential(i, float(i % 7), float(i % 7), 0.0) for i in range(n)]
            _, kept = template_potential(potentials, k)
            assert len(kept) == math.ceil(Fraction(k) * n / 100)
    potentials = [WordPotential(i, float(i), float(i), 0.0) for i in range(40)]
    _, kept = template_potential(potentials, 25)
    assert 1 - len(kept) / 40 == 0.75
    _passed(f"template potential: {trials} brute-force trials exact, mask ratio 0.75 at K=25")


def test_dcpmi_equals_k100_template_potential(toy, task):
    """dcpmi_mine scores equal template_potential at K=100 exactly for all
    200 toy documents."""
    backend = MockScoringBackend(seed=SEED_SCORER, model="mock-scorer")
    mined, skipped = dcpmi_mine(toy, task, backend, rate_percent=100)
    assert skipped == []
    assert len(mined) == len(toy)
    scored, _ = score_corpus(toy, task, backend)
    expected = {ds.doc_id: template_potential(ds.potentials, 100.0)[0] for ds in scored}
    for m in mined:
        assert m.score == expected[m.doc_id]
    _passed(f"dcpmi equivalence: {len(mined)} documents exact")


def test_selection_invariant(graft_dir):
    """Every selected potential dominates every unselected one; the selected
    size is the exact ceiling; N=10 over 10,000 templates yields 1,000."""
    templates = [template_from_row(r) for r in read_jsonl(graft_dir / "templates.jsonl")]
    selected_rows = read_jsonl(graft_dir / "selected.jsonl")
    selected_ids = {r["origin_id"] for r in selected_rows}
    assert len(selected_rows) == math.ceil(Fraction(10) * len(templates) / 100)
    floor = min(r["potential"] for r in selected_rows)
    for t in templates:
        if t.origin_id not in selected_ids:
            assert t.potential <= floor
    big = [
        Template(
            origin_id=f"t{i:05d}",
            slots=(Slot(0, "w"),),
            potential=float((i * 7919) % 104729) / 8,
            kept_count=1,
            k_percent=25.0,
        )
        for i in range(10_000)
    ]
    chosen = rank_and_select(big, 10)
    assert len(chosen) == 1000  # ceil(10% of 10,000), within the <=1000 budget
    worst_chosen = min(t.potential for t in chosen)
    unchosen_ids = set(t.origin_id for t in big) - set(t.origin_id for t in chosen)
    assert all(t.potential <= worst_chosen for t in big if t.origin_id in unchosen_ids)
    _passed("selection invariant: dominance and exact ceiling sizes")


def test_fill_validation_on_load(graft_dir):
    """100% of emitted grafted texts re-validate on load; echo-mock fills
    differ from their templates only at blank positions."""
    templates = {
        r["origin_id"]: template_from_row(r) for r in read_jsonl(graft_dir / "selected.jsonl")
    }
    grafted = read_jsonl(graft_dir / "grafted.jsonl")
    assert grafted, "no grafted texts produced"
    for row in grafted:
        template = templates[row["origin_id"]]
        verdict = validate_filled(template, row["text"])
        assert verdict.ok, f"{row['origin_id']}: {verdict.reason}"
        words = row["text"].split(" ")
        assert len(words) == len(template.slots)
        for slot, word in zip(template.slots, words):
            if slot.kept:
                assert word == slot.surface
            else:
                assert word != template.mask_token
    _passed(f"fill validation: {len(grafted)}/{len(grafted)} grafts valid, diffs only at blanks")


class _ShiftedScoring:
    def __init__(self, inner, delta: float):
        self.inner = inner
        self.delta = delta
        self.model = inner.model

    def score(self, req):
        return [
            ScoredToken(t.surface, t.logprob + self.delta, t.start, t.end)
            for t in self.inner.score(req)
        ]


def test_shift_invariance_end_to_end(toy, task):
    """Adding one constant to every mock logprob under both instructions
    changes nothing: delta_p, potentials, kept sets, and the selected set
    all stay exactly equal."""
    base_backend = MockScoringBackend(seed=SEED_SCORER, model="mock-scorer")
    delta = 1337 / 1024  # dyadic offset keeps double sums exact
    shifted_backend = _ShiftedScoring(
        MockScoringBackend(seed=SEED_SCORER, model="mock-scorer"), delta
    )
    base_scores, _ = score_corpus(toy, task, base_backend)
    shifted_scores, _ = score_corpus(toy, task, shifted_backend)
    docs = {d.id: d for d in toy.documents}
    base_templates, shifted_templates = [], []
    for ds_base, ds_shift in zip(base_scores, shifted_scores):
        assert ds_base.doc_id == ds_shift.doc_id
        assert [p.delta_p for p in ds_base.potentials] == [
            p.delta_p for p in ds_shift.potentials
        ]
        t_base = create_template(docs[ds_base.doc_id], ds_base.potentials, task)
        t_shift = create_template(docs[ds_shift.doc_id], ds_shift.potentials, task)
        assert t_base.kept_indices == t_shift.kept_indices
        assert t_base.potential == t_shift.potential
        base_templates.append(t_base)
        shifted_templates.append(t_shift)
    base_selected = [t.origin_id for t in rank_and_select(base_templates, task.n_percent)]
    shifted_selected = [t.origin_id for t in rank_and_select(shifted_templates, task.n_percent)]
    assert base_selected == shifted_selected
    _passed(f"shift invariance: delta={delta} leaves all outputs exactly unchanged")


def test_negative_assembly_graft_regime(graft_dir):
    """Graft bundles: no synthesized negatives, ceil(ratio * positives) raw
    negatives, all disjoint from positive origins."""
    train = read_jsonl(graft_dir / "dataset/train.jsonl")
    validation = read_jsonl(graft_dir / "dataset/validation.jsonl")
    rows = train + validation
    positives = [r for r in rows if r["label"] == "positive"]
    negatives = [r for r in rows if r["label"] == "negative"]
    assert all(r["provenance"] == "grafted" for r in positives)
    assert all(r["provenance"] == "raw-negative" for r in negatives)
    assert not any(r["provenance"] == "synthesized" for r in rows)
    assert len(negatives) == math.ceil(1.0 * len(positives))
    assert {r["source_id"] for r in negatives}.isdisjoint({r["source_id"] for r in positives})
    _passed(
        f"negative assembly (graft): {len(positives)} grafted + {len(negatives)} raw negatives"
    )


def test_negative_assembly_zerogen_regime(tmp_path):
    """ZeroGen bundles carry count positives plus count synthesized
    negatives (1000 + 1000 = 2000 at the reference configuration)."""
    config = graft_config(tmp_path / "zerogen")
    config["method"] = "zerogen"
    config["scoring_backend"] = None
    config["baselines"] = {"zerogen_count": 1000}
    out = run_cli(config, tmp_path, "zerogen")
    rows = read_jsonl(out / "dataset/train.jsonl") + read_jsonl(out / "dataset/validation.jsonl")
    assert len(rows) == 2000
    positives = [r for r in rows if r["label"] == "positive"]
    negatives = [r for r in rows if r["label"] == "negative"]
    assert len(positives) == 1000
    assert len(negatives) == 1000
    assert all(r["provenance"] == "synthesized" for r in rows)
    _passed("negative assembly (zerogen): 1000 + 1000 = 2000 synthesized examples")
