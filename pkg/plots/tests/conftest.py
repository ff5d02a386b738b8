from pathlib import Path

import pytest


@pytest.fixture(scope="session")
def sample_dir() -> Path:
    return Path(__file__).resolve().parent.parent / "sample_data"
