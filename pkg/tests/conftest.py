import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))
sys.path.insert(0, str(ROOT / "tests"))

from leakward.libspec import load_library_spec  # noqa: E402

CORPUS = ROOT / "corpus"
GOLDEN = CORPUS / "golden"


@pytest.fixture(scope="session")
def corpus_dir() -> Path:
    return CORPUS


@pytest.fixture(scope="session")
def golden_dir() -> Path:
    return GOLDEN


@pytest.fixture(scope="session")
def libspec():
    return load_library_spec((CORPUS / "minij.libspec").read_text())


@pytest.fixture(scope="session")
def corpus_sources() -> list[tuple[str, str]]:
    return [(p.name, p.read_text()) for p in sorted(CORPUS.glob("*.mj"))]
