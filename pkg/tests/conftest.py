import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from surropt.bench import SASENA_SPACE, sasena
from surropt.dataset import Dataset
from surropt.space import scale, uniform_random

settings.register_profile(
    "default", deadline=None, max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@pytest.fixture
def sasena16():
    """Sasena sampled at 16 seeded random points."""
    X = scale(uniform_random(16, 2, 0), SASENA_SPACE)
    return Dataset(X, sasena(X), SASENA_SPACE)


ACCEPTANCE: list[tuple[int, str, bool, str]] = []


@pytest.fixture(scope="session")
def acceptance():
    """Record ``(criterion, title, passed, detail)`` for the end-of-run report."""

    def record(number, title, passed, detail=""):
        ACCEPTANCE.append((number, title, bool(passed), detail))
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, passed, detail in sorted(ACCEPTANCE):
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] {number:2d}. {title}: {detail}")
