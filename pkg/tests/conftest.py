import pytest

from cloudspn import zoo


@pytest.fixture(scope="session")
def baseline():
    return zoo.build_baseline()


@pytest.fixture(scope="session")
def models():
    return {name: zoo.build_model(name) for name in zoo.MODEL_NAMES}


def pytest_terminal_summary(terminalreporter):
    import sys
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "REPORT", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
