import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

DATA_DIR = Path(__file__).resolve().parent.parent / "data"


@pytest.fixture(scope="session")
def iris_path() -> str:
    return str(DATA_DIR / "iris.csv")


@pytest.fixture(scope="session")
def wine_path() -> str:
    return str(DATA_DIR / "wine.csv")
