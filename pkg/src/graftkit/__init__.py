"""graftkit: mine masked templates from a raw corpus by LLM-logit potential
and fill them with a generation LLM to synthesize clean, near-distribution
training data for minority text classes."""

from .corpus import Corpus, Document, Word, downsample, ingest, tokenize, toy_corpus_path
from .scoring import TaskSpec, WordPotential, build_prompts, score_corpus, word_potentials
from .synthesis import GraftedText, RetryPolicy, graft_run, validate_filled
from .templating import Template, create_template, rank_and_select, template_potential

__version__ = "0.1.0"

__all__ = [
    "Corpus",
    "Document",
    "GraftedText",
    "RetryPolicy",
    "TaskSpec",
    "Template",
    "Word",
    "WordPotential",
    "build_prompts",
    "create_template",
    "downsample",
    "graft_run",
    "ingest",
    "rank_and_select",
    "score_corpus",
    "template_potential",
    "tokenize",
    "toy_corpus_path",
    "validate_filled",
    "word_potentials",
    "__version__",
]
