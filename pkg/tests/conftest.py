from __future__ import annotations

import shutil
from pathlib import Path

import pytest

REPO_ROOT = Path(__file__).resolve().parents[1]
FIXTURES_DIR = REPO_ROOT / "fixtures"


@pytest.fixture
def fixture_store(tmp_path: Path) -> Path:
    """A writable copy of the shipped fixture corpus, usable as a store."""
    store = tmp_path / "store"
    shutil.copytree(FIXTURES_DIR, store)
    return store
