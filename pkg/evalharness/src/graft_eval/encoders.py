"""Classifier backbones behind one tiny adapter interface.

The substitute encoder is a hashing bag-of-words linear model: fully
deterministic on CPU, trains in milliseconds, and keeps CI independent of
model downloads. The transformer adapter wraps a Hugging Face sequence
classifier (RoBERTa-Large in the reference protocol) for real experiments.
"""

from __future__ import annotations

import hashlib

import torch
from torch import nn


def _bucket(token: str, dim: int) -> int:
    digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big") % dim


def featurize(texts: list[str], dim: int) -> torch.Tensor:
    """L2-normalized hashed token counts, stable across platforms."""
    out = torch.zeros((len(texts), dim), dtype=torch.float32)
    for i, text in enumerate(texts):
        for token in text.casefold().split():
            out[i, _bucket(token, dim)] += 1.0
    norms = out.norm(dim=1, keepdim=True).clamp(min=1.0)
    return out / norms


class HashedBowAdapter:
    """Substitute encoder: hashed bag-of-words into a linear layer."""

    name = "hashed-bow"

    def __init__(self, feature_dim: int = 4096):
        self.feature_dim = feature_dim

    def new_model(self) -> nn.Module:
        return nn.Linear(self.feature_dim, 2)

    def logits(self, model: nn.Module, texts: list[str]) -> torch.Tensor:
        return model(featurize(texts, self.feature_dim))


class TransformerAdapter:
    """Hugging Face sequence classifier; requires the transformers extra and
    access to the model weights."""

    name = "transformer"

    def __init__(self, model_name: str = "roberta-large", max_length: int = 256):
        try:
            from transformers import AutoTokenizer
        except ImportError as exc:  # pragma: no cover - environment dependent
            raise RuntimeError(
                "the transformer encoder needs the 'transformers' package "
                "(pip install graft-eval[transformer])"
            ) from exc
        self.model_name = model_name
        self.max_length = max_length
        try:
            self.tokenizer = AutoTokenizer.from_pretrained(model_name)
        except Exception as exc:  # pragma: no cover - needs hub access
            raise RuntimeError(
                f"could not load tokenizer for {model_name!r} "
                "(model weights/tokenizer must be reachable): "
                f"{exc}"
            ) from exc

    def new_model(self):  # pragma: no cover - requires model download
        from transformers import AutoModelForSequenceClassification

        return AutoModelForSequenceClassification.from_pretrained(
            self.model_name, num_labels=2
        )

    def logits(self, model, texts: list[str]) -> torch.Tensor:  # pragma: no cover
        batch = self.tokenizer(
            texts,
            padding=True,
            truncation=True,
            max_length=self.max_length,
            return_tensors="pt",
        )
        return model(**batch).logits


def build_adapter(encoder: str, feature_dim: int = 4096, model_name: str = "roberta-large"):
    if encoder == "hashed-bow":
        return HashedBowAdapter(feature_dim=feature_dim)
    if encoder == "transformer":
        return TransformerAdapter(model_name=model_name)
    raise ValueError(f"unknown encoder: {encoder!r}")
