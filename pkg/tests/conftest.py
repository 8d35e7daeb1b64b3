import numpy as np
import pytest

import mixcens as mc

_ACCEPTANCE = {}


@pytest.fixture
def record_criterion():
    """Record one acceptance line; printed in the terminal summary."""

    def record(number, title, ok, detail=""):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title}"
        if detail:
            line += f" ({detail})"
        _ACCEPTANCE[number] = line
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_ACCEPTANCE):
        terminalreporter.write_line(_ACCEPTANCE[key])


@pytest.fixture
def exp4():
    return mc.exponential(4.0)


@pytest.fixture
def exp10():
    return mc.exponential(10.0)


@pytest.fixture
def decay12():
    return mc.exp_decay(12.0)


@pytest.fixture
def tiny():
    """Four-row dataset with two served, one reported, one silent."""
    return mc.Dataset.from_observations([(0.5, 0, 0), (0.1, 1, 1), (0.2, 1, 0), (0.3, 0, 0)])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
