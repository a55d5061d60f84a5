from __future__ import annotations

from fractions import Fraction

import pytest

from ecs_lab.model import make_model, make_point
from ecs_lab.scalar import parse_f

NULL_GRAM = [[0, 1], [1, 0]]
JORDAN = [[0, 1], [0, 0]]


@pytest.fixture
def m1():
    return make_model(4, NULL_GRAM, JORDAN, parse_f("t^-2"), name="M1")


@pytest.fixture
def m2():
    return make_model(4, NULL_GRAM, JORDAN, parse_f("t"), name="M2")


@pytest.fixture
def m3():
    return make_model(4, [[1, 0], [0, 1]], [[1, 0], [0, -1]], parse_f("t"), name="M3")


@pytest.fixture
def m2_point(m2):
    return make_point(m2, 2, 0, (1, 1))


def F(*args):
    return Fraction(*args)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for number in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[number])
