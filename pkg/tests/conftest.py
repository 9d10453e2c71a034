from __future__ import annotations

import pytest

from helpers import write_corpus
from quantgym.marketdata import load_corpus


@pytest.fixture(scope="session")
def corpus_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("corpus")
    return write_corpus(root)


@pytest.fixture(scope="session")
def corpus(corpus_dir):
    return load_corpus(corpus_dir)


@pytest.fixture(scope="session")
def msft(corpus):
    return corpus.series("MSFT")
