from __future__ import annotations

from pathlib import Path

import pytest

TESTS_DIR = Path(__file__).parent
FIXTURES = TESTS_DIR / "fixtures"
PRIMARY_FIXTURES = TESTS_DIR.parent.parent / "tests" / "fixtures"


@pytest.fixture()
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture()
def primary_fixtures_dir() -> Path:
    return PRIMARY_FIXTURES


@pytest.fixture()
def toy_corpus_path() -> Path:
    return FIXTURES / "toy_corpus.jsonl"
