from __future__ import annotations

import sys
from pathlib import Path

import pytest

TESTS_DIR = Path(__file__).parent
FIXTURES = TESTS_DIR / "fixtures"

sys.path.insert(0, str(TESTS_DIR))


@pytest.fixture()
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture()
def pipeline_dir(tmp_path) -> Path:
    """Writable copy of the pipeline fixture (caches and outputs land here)."""
    import shutil

    target = tmp_path / "pipeline"
    shutil.copytree(FIXTURES / "pipeline", target)
    return target
