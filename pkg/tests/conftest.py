from pathlib import Path

import pytest

from saw.cli import analyze
from saw.model import parse_model, read_model

ROOT = Path(__file__).resolve().parent.parent
EXAMPLE = ROOT / "example"


def bench(n: int):
    return read_model(EXAMPLE / f"model{n}.txt")


def model_from(text: str):
    return parse_model(text)


@pytest.fixture(scope="session")
def model1():
    return bench(1)


@pytest.fixture(scope="session")
def model5():
    return bench(5)


@pytest.fixture(scope="session")
def run1(model1):
    """Full pipeline on benchmark #1 at its published settings."""
    return analyze(model1)


@pytest.fixture(scope="session")
def run5(model5):
    return analyze(model5)


# one line per acceptance criterion, printed at the end of the run
ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
