import pytest

from motsim.atomkit import get_preset


@pytest.fixture(scope="session")
def tm():
    return get_preset("Tm-410.6")


@pytest.fixture(scope="session")
def tm530():
    return get_preset("Tm-530.7")


@pytest.fixture(scope="session")
def cs():
    return get_preset("Cs-852")


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import LINES
    except ImportError:
        return
    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in LINES:
            terminalreporter.write_line(line)
