import pytest

from abrsim.engine import Simulator


@pytest.fixture
def sim():
    return Simulator()


CRITERIA: list[str] = []


@pytest.fixture
def report():
    def add(number: int, ok: bool, detail: str) -> None:
        line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
        CRITERIA.append(line)
        print(line)

    return add


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in sorted(CRITERIA, key=lambda l: int(l.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
