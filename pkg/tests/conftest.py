import pytest

from cfo_scheme.waveform import LTE_1M4, default_pilot_layout, make_pilot_sequence

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def num():
    return LTE_1M4


@pytest.fixture
def layout(num):
    return default_pilot_layout(num)


@pytest.fixture
def pilots(layout):
    return make_pilot_sequence(layout)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
