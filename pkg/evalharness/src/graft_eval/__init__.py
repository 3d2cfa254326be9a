"""graft-eval: train/validate/test harness for graftkit dataset bundles."""

from .metrics import EvalReport, f1_from_counts, precision_recall_f1
from .train import TrainConfig, finetune_and_eval

__version__ = "0.1.0"

__all__ = [
    "EvalReport",
    "TrainConfig",
    "f1_from_counts",
    "finetune_and_eval",
    "precision_recall_f1",
    "__version__",
]
