import math
import sys

import pytest

from catfeedback import FeedbackParams, TruncationConfig, cat_state

ALPHA = math.sqrt(3.3)


@pytest.fixture(scope="session")
def trunc32():
    return TruncationConfig(32)


@pytest.fixture(scope="session")
def params():
    return FeedbackParams()


@pytest.fixture(scope="session")
def odd_cat(trunc32):
    return cat_state(ALPHA, -1, trunc32)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for line in lines:
        terminalreporter.write_line(line)
