import os
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from cases import TWO_BRANCH_A  # noqa: E402

from norm_soliton import ground_state_local_min, mountain_pass  # noqa: E402

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session", autouse=True)
def soliton_cache(tmp_path_factory):
    """Share one soliton cache across the session unless the caller set one."""
    if not os.environ.get("NORM_SOLITON_CACHE"):
        os.environ["NORM_SOLITON_CACHE"] = str(tmp_path_factory.mktemp("soliton-cache"))
    yield


@pytest.fixture(scope="session")
def local_min_a():
    return ground_state_local_min(TWO_BRANCH_A)


@pytest.fixture(scope="session")
def mountain_a():
    return mountain_pass(TWO_BRANCH_A)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
