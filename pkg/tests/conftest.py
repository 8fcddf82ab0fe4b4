import os
import sys

import numpy as np
import pytest
from hypothesis import settings

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# Acceptance results, filled by test_acceptance.py and echoed at the end of the run.
ACCEPTANCE = {}


@pytest.fixture
def record():
    def _record(number, title, ok, detail):
        ACCEPTANCE[number] = (title, bool(ok), detail)
        print(_line(number, title, ok, detail))
    return _record


def _line(number, title, ok, detail):
    return f"[{'PASS' if ok else 'FAIL'}] criterion {number:2d}: {title} ({detail})"


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        terminalreporter.write_line(_line(number, *ACCEPTANCE[number]))
