import pathlib

import pytest

from anfis_auth.config import load_experiment
from anfis_auth.events import generate_trace

REFERENCE_CONFIG = pathlib.Path(__file__).resolve().parents[1] / "configs" / "reference.ini"


@pytest.fixture(scope="session")
def reference_experiment():
    return load_experiment(REFERENCE_CONFIG)


@pytest.fixture(scope="session")
def reference_trace(reference_experiment):
    return generate_trace(reference_experiment.profile)


@pytest.fixture(scope="session")
def reference_result(reference_experiment):
    from anfis_auth.harness import run_experiment
    return run_experiment(reference_experiment)


def pytest_terminal_summary(terminalreporter):
    module = __import__("sys").modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
