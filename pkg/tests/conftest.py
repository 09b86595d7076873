import pytest

from lexgraph import Engine, fixture_path, load, read_corpus

PINNED = "2025-01-01T00:00:00Z"


@pytest.fixture(scope="session")
def cf88_corpus():
    return read_corpus(fixture_path("cf88-mini"))


@pytest.fixture(scope="session")
def store(cf88_corpus):
    return load(cf88_corpus)


@pytest.fixture(scope="session")
def engine(store):
    return Engine(store, pinned_now=PINNED)


ACCEPTANCE_LINES = []


def report_criterion(number, title, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] AC{number:02d} {title}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
