"""Harness acceptance criteria, one printed pass line each.

Run with ``pytest tests/test_acceptance.py -v -s``.
"""

from __future__ import annotations

import random

from bundle_fixtures import make_bundle, make_test_file
from graft_eval.metrics import confusion_counts, precision_recall_f1
from graft_eval.train import TrainConfig, finetune_and_eval


def _passed(name: str) -> None:
    print(f"[ACCEPTANCE PASS] {name}")


def test_f1_matches_closed_form_oracle():
    """F1/precision/recall on fixed confusion matrices match the closed-form
    arithmetic to 1e-9."""
    cases = [
        (2, 1, 2),
        (10, 0, 0),
        (0, 0, 5),
        (0, 4, 0),
        (7, 3, 2),
        (1, 1, 1),
    ]
    rng = random.Random(11)
    cases += [(rng.randint(0, 50), rng.randint(0, 50), rng.randint(0, 50)) for _ in range(100)]
    for tp, fp, fn in cases:
        precision, recall, f1 = precision_recall_f1(tp, fp, fn)
        expected_p = tp / (tp + fp) if tp + fp else 0.0
        expected_r = tp / (tp + fn) if tp + fn else 0.0
        expected_f1 = (
            2 * expected_p * expected_r / (expected_p + expected_r)
            if expected_p + expected_r
            else 0.0
        )
        assert abs(precision - expected_p) <= 1e-9
        assert abs(recall - expected_r) <= 1e-9
        assert abs(f1 - expected_f1) <= 1e-9
    assert abs(precision_recall_f1(2, 1, 2)[2] - 4 / 7) <= 1e-9
    _passed(f"F1 arithmetic: {len(cases)} confusion matrices within 1e-9")


def test_confusion_extremes():
    """Perfect predictions give F1=1; all-negative predictions with positives
    present give F1=0."""
    y_true = [1, 0, 1, 0, 1]
    tp, fp, fn, _ = confusion_counts(y_true, y_true)
    assert precision_recall_f1(tp, fp, fn)[2] == 1.0
    tp, fp, fn, _ = confusion_counts(y_true, [0, 0, 0, 0, 0])
    assert precision_recall_f1(tp, fp, fn)[2] == 0.0
    _passed("confusion extremes: perfect -> 1.0, degenerate all-negative -> 0.0")


def test_substitute_encoder_zero_variance(tmp_path):
    """With every seed fixed, CPU runs of the substitute encoder have
    exactly zero run-to-run variance."""
    bundle = make_bundle(tmp_path / "bundle", seed=7)
    test_file = make_test_file(tmp_path / "test.jsonl", seed=8)
    config = TrainConfig(
        encoder="hashed-bow",
        epochs=3,
        learning_rate=0.5,
        runs=4,
        seed=123,
        vary_seed_per_run=False,
    )
    report = finetune_and_eval(bundle, test_file, config)
    assert len(report.per_run_f1) == 4
    assert len(set(report.per_run_f1)) == 1
    variance = sum((x - report.f1_mean_runs) ** 2 for x in report.per_run_f1) / 4
    assert variance == 0.0
    repeat = finetune_and_eval(bundle, test_file, config)
    assert repeat == report
    _passed("substitute encoder: zero variance across 4 fixed-seed runs, rerun identical")
