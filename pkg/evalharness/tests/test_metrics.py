from __future__ import annotations

import random

import pytest

from graft_eval.metrics import EvalReport, confusion_counts, f1_from_counts, precision_recall_f1


class TestConfusionCounts:
    def test_basic(self):
        y_true = [1, 1, 0, 0, 1]
        y_pred = [1, 0, 1, 0, 1]
        assert confusion_counts(y_true, y_pred) == (2, 1, 1, 1)

    def test_length_mismatch(self):
        with pytest.raises(ValueError, match="mismatch"):
            confusion_counts([1], [1, 0])


class TestPrecisionRecallF1:
    def test_worked_example(self):
        # TP=2, FP=1, FN=2 -> P=2/3, R=1/2, F1=4/7
        precision, recall, f1 = precision_recall_f1(2, 1, 2)
        assert abs(precision - 2 / 3) <= 1e-9
        assert abs(recall - 1 / 2) <= 1e-9
        assert abs(f1 - 4 / 7) <= 1e-9

    def test_perfect(self):
        assert precision_recall_f1(10, 0, 0) == (1.0, 1.0, 1.0)

    def test_all_negative_predictions_with_positives_present(self):
        precision, recall, f1 = precision_recall_f1(0, 0, 5)
        assert (precision, recall, f1) == (0.0, 0.0, 0.0)

    def test_matches_sklearn_oracle(self):
        from sklearn.metrics import f1_score, precision_score, recall_score

        rng = random.Random(3)
        for _ in range(50):
            n = rng.randint(2, 60)
            y_true = [rng.randint(0, 1) for _ in range(n)]
            y_pred = [rng.randint(0, 1) for _ in range(n)]
            tp, fp, fn, _ = confusion_counts(y_true, y_pred)
            precision, recall, f1 = precision_recall_f1(tp, fp, fn)
            assert abs(precision - precision_score(y_true, y_pred, zero_division=0)) <= 1e-9
            assert abs(recall - recall_score(y_true, y_pred, zero_division=0)) <= 1e-9
            assert abs(f1 - f1_score(y_true, y_pred, zero_division=0)) <= 1e-9

    def test_harmonic_identity(self):
        rng = random.Random(4)
        for _ in range(200):
            tp, fp, fn = rng.randint(0, 20), rng.randint(0, 20), rng.randint(0, 20)
            precision, recall, f1 = precision_recall_f1(tp, fp, fn)
            if precision and recall:
                assert abs(f1 - 2 * precision * recall / (precision + recall)) <= 1e-12


class TestEvalReport:
    def test_per_run_length_enforced(self):
        with pytest.raises(ValueError, match="per_run_f1"):
            EvalReport(
                f1=1.0,
                precision=1.0,
                recall=1.0,
                runs=3,
                per_run_f1=[1.0],
                f1_mean_runs=1.0,
                dataset_manifest_hash="x",
            )

    def test_save_round_trip(self, tmp_path):
        report = EvalReport(
            f1=f1_from_counts(2, 1, 2),
            precision=2 / 3,
            recall=0.5,
            runs=1,
            per_run_f1=[4 / 7],
            f1_mean_runs=4 / 7,
            dataset_manifest_hash="abc",
        )
        out = tmp_path / "report.json"
        report.save(out)
        import json

        loaded = json.loads(out.read_text())
        assert loaded["f1"] == report.f1
        assert loaded["dataset_manifest_hash"] == "abc"
