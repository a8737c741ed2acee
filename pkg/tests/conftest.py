import sys
from pathlib import Path

import pytest

from xrank import datasets
from xrank.corpus_io import load_corpus, load_queries

HERE = Path(__file__).parent
sys.path.insert(0, str(HERE))

STUB = [sys.executable, "-m", "xrank.stub_scorer"]


@pytest.fixture(scope="session")
def fixture_paths():
    return datasets.fixture_paths()


@pytest.fixture(scope="session")
def corpus(fixture_paths):
    return load_corpus(fixture_paths["corpus"])


@pytest.fixture(scope="session")
def queries(fixture_paths):
    return load_queries(fixture_paths["queries"])


@pytest.fixture(scope="session")
def corpus20():
    return load_corpus(HERE / "fixtures" / "corpus20.jsonl")


@pytest.fixture
def stub_cmd():
    return list(STUB)


def pytest_terminal_summary(terminalreporter):
    from acceptance_log import RESULTS
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(RESULTS):
        terminalreporter.write_line(line[1])
