from __future__ import annotations

import pytest

from graftkit.corpus import Corpus, Document
from graftkit.dataset import (
    LabeledExample,
    assemble,
    example_from_row,
    example_to_row,
    load_bundle,
    positives_from_generations,
    save_bundle,
    split,
)
from graftkit.errors import ConfigError, DataError
from graftkit.synthesis import GraftedText


def _corpus(n):
    docs = tuple(
        Document.from_text(f"c:{i:03d}", f"raw corpus text number {i}") for i in range(n)
    )
    return Corpus(documents=docs, source_path="mem")


def _positives(n, origin_prefix="c"):
    return [
        LabeledExample(f"grafted text {i}", "positive", "grafted", f"{origin_prefix}:{i:03d}")
        for i in range(n)
    ]


def _synth(n):
    return [
        GraftedText(
            text=f"synthesized negative {i}",
            label="not:X",
            origin_id=f"zerogen:out-of-class:{i:04d}",
            template_potential=None,
            attempts=1,
        )
        for i in range(n)
    ]


class TestAssemble:
    def test_ratio_one_doubles(self):
        examples = assemble(_positives(200), _corpus(500), "raw-sample", 1.0, seed=3)
        assert len(examples) == 400
        assert sum(1 for e in examples if e.label == "negative") == 200

    def test_negative_count_is_ceiling(self):
        examples = assemble(_positives(3), _corpus(50), "raw-sample", 0.5, seed=3)
        assert sum(1 for e in examples if e.label == "negative") == 2  # ceil(1.5)

    def test_raw_negatives_exclude_positive_origins(self):
        corpus = _corpus(30)
        positives = _positives(10)  # origins c:000..c:009
        examples = assemble(positives, corpus, "raw-sample", 1.0, seed=1)
        negative_sources = {e.source_id for e in examples if e.label == "negative"}
        assert negative_sources.isdisjoint({p.source_id for p in positives})

    def test_shortfall_is_an_error(self):
        with pytest.raises(DataError, match="short"):
            assemble(_positives(10), _corpus(15), "raw-sample", 1.0, seed=1)

    def test_synthesized_strategy_consumes_generations(self):
        examples = assemble(
            _positives(5), _corpus(5), "synthesized", 1.0, seed=1, synthesized_negatives=_synth(5)
        )
        negatives = [e for e in examples if e.label == "negative"]
        assert len(negatives) == 5
        assert {e.provenance for e in negatives} == {"synthesized"}

    def test_synthesized_strategy_requires_generations(self):
        with pytest.raises(DataError, match="synthesized_negatives"):
            assemble(_positives(5), _corpus(5), "synthesized", 1.0, seed=1)

    def test_collision_between_labels_rejected(self):
        corpus = _corpus(10)
        positives = [
            LabeledExample(corpus.documents[5].text, "positive", "grafted", "other:id")
        ]
        with pytest.raises(DataError, match="both labels"):
            # ratio 9/1 forces the sampler to take every eligible doc,
            # including the one whose text equals the positive
            assemble(positives, corpus, "raw-sample", 9.0, seed=1)

    def test_ratio_must_be_positive(self):
        with pytest.raises(DataError, match="ratio"):
            assemble(_positives(5), _corpus(20), "raw-sample", 0.0, seed=1)

    def test_deterministic_under_seed(self):
        a = assemble(_positives(20), _corpus(100), "raw-sample", 1.0, seed=5)
        b = assemble(_positives(20), _corpus(100), "raw-sample", 1.0, seed=5)
        assert a == b


class TestSplit:
    def test_eighty_twenty(self):
        examples = assemble(_positives(200), _corpus(500), "raw-sample", 1.0, seed=3)
        bundle = split(examples, 0.2, seed=11)
        assert len(bundle.train) == 320
        assert len(bundle.validation) == 80

    def test_stratified_within_one(self):
        examples = assemble(_positives(25), _corpus(300), "raw-sample", 1.0, seed=3)
        bundle = split(examples, 0.2, seed=11)
        for part in (bundle.train, bundle.validation):
            pos = sum(1 for e in part if e.label == "positive")
            neg = len(part) - pos
            assert abs(pos - neg) <= 1

    def test_same_seed_same_membership(self):
        examples = assemble(_positives(40), _corpus(200), "raw-sample", 1.0, seed=3)
        a = split(examples, 0.2, seed=11)
        b = split(examples, 0.2, seed=11)
        assert a.train == b.train and a.validation == b.validation

    def test_no_text_in_both_sides(self):
        examples = assemble(_positives(60), _corpus(200), "raw-sample", 1.0, seed=3)
        bundle = split(examples, 0.25, seed=2)
        assert {e.text for e in bundle.train}.isdisjoint({e.text for e in bundle.validation})

    def test_duplicate_texts_travel_together(self):
        examples = _positives(10) + [
            LabeledExample("grafted text 0", "positive", "grafted", "dup")
        ]
        examples += [
            LabeledExample(f"neg {i}", "negative", "raw-negative", f"n:{i}") for i in range(11)
        ]
        bundle = split(examples, 0.3, seed=7)
        assert {e.text for e in bundle.train}.isdisjoint({e.text for e in bundle.validation})

    def test_tiny_label_rejected(self):
        examples = _positives(1) + [
            LabeledExample("neg 1", "negative", "raw-negative", "n:1"),
            LabeledExample("neg 2", "negative", "raw-negative", "n:2"),
        ]
        with pytest.raises(DataError, match="positive"):
            split(examples, 0.2, seed=1)

    def test_fraction_range_enforced(self):
        examples = assemble(_positives(10), _corpus(100), "raw-sample", 1.0, seed=3)
        for bad in (0.0, 1.0, -0.2, 1.5):
            with pytest.raises(ConfigError, match="validation_fraction"):
                split(examples, bad, seed=1)

    def test_manifest_counts_sum(self):
        examples = assemble(_positives(33), _corpus(200), "raw-sample", 1.0, seed=3)
        bundle = split(examples, 0.2, seed=11)
        counts = bundle.manifest["counts"]
        assert counts["train"] + counts["validation"] == len(examples)
        assert sum(counts["by_provenance"].values()) == len(examples)


class TestBundleIO:
    def test_round_trip(self, tmp_path):
        examples = assemble(_positives(20), _corpus(100), "raw-sample", 1.0, seed=3)
        bundle = split(examples, 0.2, seed=11)
        save_bundle(bundle, tmp_path / "dataset")
        loaded = load_bundle(tmp_path / "dataset")
        assert loaded.train == bundle.train
        assert loaded.validation == bundle.validation
        assert loaded.manifest == bundle.manifest

    def test_row_round_trip(self):
        ex = LabeledExample("text", "positive", "grafted", "c:001")
        assert example_from_row(example_to_row(ex)) == ex

    def test_overlap_detected_on_load(self, tmp_path):
        from graftkit.util import write_jsonl, write_json

        row = {"text": "same", "label": "positive", "provenance": "grafted", "source_id": None}
        write_jsonl(tmp_path / "train.jsonl", [row])
        write_jsonl(tmp_path / "validation.jsonl", [row])
        write_json(tmp_path / "manifest.json", {})
        with pytest.raises(DataError, match="overlap"):
            load_bundle(tmp_path)
