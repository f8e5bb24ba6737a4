import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from helpers import write_constant_corpus, write_gm_corpus  # noqa: E402


@pytest.fixture(scope="session")
def gm_corpus(tmp_path_factory):
    """60 clean multi-track files, deterministic across runs."""
    root = tmp_path_factory.mktemp("gm_corpus")
    write_gm_corpus(root, n_files=60, seed=7)
    return root


@pytest.fixture(scope="session")
def mixed_corpus(tmp_path_factory):
    """Pipeline fixture: clean files plus duplicates plus malformed junk."""
    root = tmp_path_factory.mktemp("mixed_corpus")
    counts = write_gm_corpus(root, n_files=20, seed=11, n_duplicates=5, n_malformed=3)
    return root, counts


@pytest.fixture(scope="session")
def constant_corpus(tmp_path_factory):
    """Token corpus with constant metadata for the leakage probe."""
    root = tmp_path_factory.mktemp("constant_corpus")
    write_constant_corpus(root, n_songs=6)
    return root
