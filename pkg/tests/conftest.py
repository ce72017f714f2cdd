import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from texfeat import features, fixtures, imageio  # noqa: E402

FIG1_WINDOW = [[8, 22, 12], [93, 50, 55], [8, 89, 5]]


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def fixture_corpus(tmp_path_factory):
    return fixtures.make_fixture_corpus(tmp_path_factory.mktemp("corpus"))


@pytest.fixture(scope="session")
def corpus_table(fixture_corpus):
    patches = imageio.ingest_dataset(fixture_corpus, 128)
    return features.extract_table(patches, features.ExtractionConfig(), jobs=4)


def pytest_terminal_summary(terminalreporter):
    lines = []
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            nodeid = getattr(rep, "nodeid", "")
            if "test_acceptance.py" in nodeid and rep.when == "call":
                lines.append((nodeid.split("::")[-1], outcome))
    if lines:
        terminalreporter.section("acceptance criteria")
        for name, outcome in sorted(lines):
            terminalreporter.write_line(f"{'PASS' if outcome == 'passed' else 'FAIL'}  {name}")
