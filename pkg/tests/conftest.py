import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_addoption(parser):
    parser.addoption("--skip-acceptance", action="store_true", help="deselect the acceptance criteria")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--skip-acceptance"):
        keep = [i for i in items if "acceptance" not in i.keywords]
        config.hook.pytest_deselected(items=[i for i in items if "acceptance" in i.keywords])
        items[:] = keep


# one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
