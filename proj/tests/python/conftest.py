import json
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parents[2]
SNAPSHOT = ROOT / "data" / "snapshot"


@pytest.fixture(scope="session")
def root():
    return ROOT


@pytest.fixture(scope="session")
def memo3_run():
    import synthint

    text = synthint.run_pipeline(str(ROOT / "configs" / "memo3.json"))
    return text, json.loads(text)
