import sys
import time
from pathlib import Path

import pytest

TESTS_DIR = Path(__file__).parent
if str(TESTS_DIR) not in sys.path:
    sys.path.insert(0, str(TESTS_DIR))

SESSION_START = time.perf_counter()


def pytest_collection_modifyitems(session, config, items):
    # acceptance criteria run after everything else so the wall-clock
    # criterion sees the whole suite
    items.sort(key=lambda item: item.fspath.basename == "test_acceptance.py")

CORPUS = TESTS_DIR / "corpus"
GOLDEN = TESTS_DIR / "golden"


@pytest.fixture
def corpus_dir() -> Path:
    return CORPUS


@pytest.fixture
def golden_dir() -> Path:
    return GOLDEN
