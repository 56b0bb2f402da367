import sys
from datetime import date, timedelta
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from routine_miner.model import NodeGrid, TimeSlotNode  # noqa: E402

# pass/fail lines collected by the acceptance tests
ACCEPTANCE_LINES: list[str] = []


def node(i, j, scene="s", activity="a", objects=(), images=15, slot_minutes=30):
    start = j * slot_minutes
    return TimeSlotNode(i, j, scene, activity, frozenset(objects), images, start, start + 2 * (images - 1))


def grid_of(nodes, n_days=None, slot_minutes=30, user="u"):
    n_days = n_days if n_days is not None else max(n.day_index for n in nodes) + 1
    days = tuple(date(2021, 3, 1) + timedelta(days=d) for d in range(n_days))
    return NodeGrid(user, slot_minutes, days, {n.key: n for n in nodes})


@pytest.fixture
def make_node():
    return node


@pytest.fixture
def make_grid():
    return grid_of


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
