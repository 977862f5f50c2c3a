import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture
def corpus_path() -> Path:
    return FIXTURES / "corpus.jsonl"


@pytest.fixture
def queries_path() -> Path:
    return FIXTURES / "queries.jsonl"


@pytest.fixture
def database(corpus_path):
    from snipq.corpus import load_corpus

    return load_corpus(corpus_path)


@pytest.fixture
def queries(queries_path):
    from snipq.corpus import load_queries

    return load_queries(queries_path)
