import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from crackhash.dataset import extract_table, scan  # noqa: E402
from crackhash.synthetic import write_fixture  # noqa: E402


@pytest.fixture(scope="session")
def fixture_root(tmp_path_factory):
    """The 200-image synthetic fixture set (100 cracked, 100 uncracked)."""
    return write_fixture(tmp_path_factory.mktemp("fixture"), n_per_class=100, seed=42)


@pytest.fixture(scope="session")
def fixture_table(fixture_root):
    return extract_table(scan(fixture_root))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    verdicts = getattr(mod, "VERDICTS", None)
    if verdicts:
        terminalreporter.section("acceptance criteria")
        for line in verdicts:
            terminalreporter.write_line(line)
