from __future__ import annotations

import numpy as np
import pytest

from heisenberg_pam.group import GroupPoint
from heisenberg_pam.noise import TestFunction


@pytest.fixture(scope="session")
def frozen_pair() -> tuple[TestFunction, TestFunction]:
    """Two modulated Gaussian bumps used as the fixed covariance test case."""
    phi = TestFunction(GroupPoint.identity(1), 1.0, frequency=6.0)
    psi = TestFunction(GroupPoint((0.3,), (-0.2,), 0.15), 0.9, frequency=7.0)
    return phi, psi


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def criterion():
    """Record one PASS/FAIL line for an acceptance criterion, then assert it."""

    def record(number: int, name: str, passed: bool, detail: str) -> None:
        line = f"criterion {number:>2} {'PASS' if passed else 'FAIL'}  {name}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert passed, line

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
