from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from qrisk.kb import load_seeded_kb  # noqa: E402
from qrisk.model import AssessmentConfig  # noqa: E402

DATA = Path(__file__).parent / "data"
GOLDEN = Path(__file__).parent / "golden"


@pytest.fixture(scope="session")
def kb():
    return load_seeded_kb()


@pytest.fixture
def cfg():
    return AssessmentConfig()


@pytest.fixture(scope="session")
def sample_path():
    return DATA / "sample_inventory.json"
