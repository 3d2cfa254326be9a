"""Direction check against live-LLM artifacts.

The claim under test (grafting beats plain in-context generation on the
same backends, by mean-of-runs F1) needs bundles produced with real scoring
and generation models plus a real gold test set, so this only runs when the
environment points at them:

    GRAFT_EVAL_BUNDLE_GRAFT  dataset bundle dir from a graft run
    GRAFT_EVAL_BUNDLE_ICG    dataset bundle dir from an icg run
    GRAFT_EVAL_TEST          gold test JSONL

Optionally GRAFT_EVAL_BUNDLE_GRAFT_SYNTHNEG (a graft bundle assembled with
synthesized negatives) enables the second directional check: grafting
without negative synthesis performs at least as well as with it.
"""

from __future__ import annotations

import os

import pytest

from graft_eval.train import TrainConfig, finetune_and_eval

REQUIRED = ("GRAFT_EVAL_BUNDLE_GRAFT", "GRAFT_EVAL_BUNDLE_ICG", "GRAFT_EVAL_TEST")

pytestmark = pytest.mark.skipif(
    not all(os.environ.get(v) for v in REQUIRED),
    reason="live-LLM artifacts not configured (set " + ", ".join(REQUIRED) + ")",
)


def _config() -> TrainConfig:
    return TrainConfig(
        encoder=os.environ.get("GRAFT_EVAL_ENCODER", "transformer"),
        runs=5,
        seed=0,
        vary_seed_per_run=True,
    )


def test_grafting_beats_in_context_generation():
    config = _config()
    graft = finetune_and_eval(
        os.environ["GRAFT_EVAL_BUNDLE_GRAFT"], os.environ["GRAFT_EVAL_TEST"], config
    )
    icg = finetune_and_eval(
        os.environ["GRAFT_EVAL_BUNDLE_ICG"], os.environ["GRAFT_EVAL_TEST"], config
    )
    print(f"graft F1 {graft.f1_mean_runs:.4f} vs icg F1 {icg.f1_mean_runs:.4f}")
    assert graft.f1_mean_runs > icg.f1_mean_runs


@pytest.mark.skipif(
    not os.environ.get("GRAFT_EVAL_BUNDLE_GRAFT_SYNTHNEG"),
    reason="synthesized-negative graft bundle not configured",
)
def test_raw_negatives_at_least_as_good_as_synthesized():
    config = _config()
    raw_neg = finetune_and_eval(
        os.environ["GRAFT_EVAL_BUNDLE_GRAFT"], os.environ["GRAFT_EVAL_TEST"], config
    )
    synth_neg = finetune_and_eval(
        os.environ["GRAFT_EVAL_BUNDLE_GRAFT_SYNTHNEG"], os.environ["GRAFT_EVAL_TEST"], config
    )
    print(f"raw-neg F1 {raw_neg.f1_mean_runs:.4f} vs synth-neg F1 {synth_neg.f1_mean_runs:.4f}")
    assert raw_neg.f1_mean_runs >= synth_neg.f1_mean_runs
