from __future__ import annotations

import pytest

from bundle_fixtures import make_bundle, make_test_file


@pytest.fixture()
def bundle_dir(tmp_path):
    return make_bundle(tmp_path / "bundle")


@pytest.fixture()
def test_file(tmp_path):
    return make_test_file(tmp_path / "test.jsonl")
