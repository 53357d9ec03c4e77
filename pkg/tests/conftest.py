from __future__ import annotations

from pathlib import Path

import pytest

from tempo_rl.model import load_instance

FIXTURES = Path(__file__).resolve().parent.parent / "docs" / "fixtures"


def fixture_path(name: str) -> Path:
    return FIXTURES / name


@pytest.fixture(scope="session")
def matchcellar_small():
    return load_instance(FIXTURES / "matchcellar_small.json")


@pytest.fixture(scope="session")
def kitting_small():
    return load_instance(FIXTURES / "kitting_small.json")


@pytest.fixture(scope="session")
def majsp_small():
    return load_instance(FIXTURES / "majsp_small.json")


@pytest.fixture(scope="session")
def all_fixtures(matchcellar_small, kitting_small, majsp_small):
    return [matchcellar_small, kitting_small, majsp_small]


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
