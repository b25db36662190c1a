from __future__ import annotations

import numpy as np
import pytest

from schwarzlab.expr_lang import catalog


@pytest.fixture(scope="session")
def cat():
    return catalog()


@pytest.fixture
def rng():
    return np.random.default_rng(24301)


def random_disk_points(rng, n, radius=0.9):
    r = radius * np.sqrt(rng.uniform(size=n))
    return r * np.exp(2j * np.pi * rng.uniform(size=n))


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
