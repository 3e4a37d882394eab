import numpy as np
import pytest
from hypothesis import settings

from mcac.profile import cubic_profile

settings.register_profile("mcac", deadline=None, max_examples=40, derandomize=True)
settings.load_profile("mcac")

# PASS/FAIL lines from the acceptance suite, echoed in the terminal summary
ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def cubic():
    """Profile and corrector of the default cubic well."""
    return cubic_profile()


@pytest.fixture(scope="session")
def well(cubic):
    return cubic[0].well


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def criterion():
    """Record one PASS/FAIL line for an acceptance criterion and return the verdict."""

    def report(number, title, passed, detail):
        line = f"[{'PASS' if passed else 'FAIL'}] criterion {number:2d}: {title} | {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return passed

    return report
