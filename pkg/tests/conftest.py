from __future__ import annotations

import sys

import numpy as np
import pytest

from hiddenqj.model import build_demon_model


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


@pytest.fixture
def demon():
    return build_demon_model()


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        terminalreporter.write_line(results[n])
