import numpy as np
import pytest

from ndfwm import RelaxationParams

# criterion id -> (passed, one-line summary); filled by test_acceptance.py
ACCEPTANCE_LINES: dict[str, tuple[bool, str]] = {}

SET_A = RelaxationParams(gamma1=3.0, gamma2=6.0, gamma21=6.0, gamma_ph=3.0)
SET_B = RelaxationParams(gamma1=3.0, gamma2=0.1, gamma21=6.0, gamma_ph=3.0)
GRID = np.linspace(-150.0, 150.0, 601)


@pytest.fixture
def set_a():
    return SET_A


@pytest.fixture
def set_b():
    return SET_B


@pytest.fixture
def grid():
    return GRID.copy()


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES, key=lambda k: (int(k.split("-")[0]), k)):
        passed, text = ACCEPTANCE_LINES[key]
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  criterion {key}: {text}")
