from __future__ import annotations

import pytest

from graftkit.backends import MockGenerationBackend, MockScoringBackend
from graftkit.corpus import ingest, toy_corpus_path
from graftkit.scoring import TaskSpec


@pytest.fixture(scope="session")
def toy_corpus():
    return ingest(toy_corpus_path(), "jsonl")


@pytest.fixture()
def task():
    return TaskSpec(class_name="Surprised", style="Tweet")


@pytest.fixture()
def mock_scoring():
    return MockScoringBackend(seed=7)


@pytest.fixture()
def mock_generation():
    return MockGenerationBackend(seed=11)
