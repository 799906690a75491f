import numpy as np
import pytest

from policyscope.core import History, ProblemSpec


@pytest.fixture
def unit_square():
    return ProblemSpec("unit", 2, ((0.0, 1.0), (0.0, 1.0)))


@pytest.fixture
def box2():
    return ProblemSpec("box", 2, ((-2.0, 2.0), (-2.0, 2.0)), sense="minimize")


def make_history(spec, points, values):
    h = History(spec)
    for p, v in zip(points, values):
        h.append(np.asarray(p, dtype=float), float(v))
    return h


ACCEPTANCE_LINES = {}


def report(number, name, ok, detail):
    """Record one acceptance verdict; printed in the terminal summary."""
    ACCEPTANCE_LINES[number] = f"[{'PASS' if ok else 'FAIL'}] {number:>2}. {name}: {detail}"
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[number])
