import json

import pytest

from circfuzz.field import FieldModulus
from circfuzz.harness.config import data_path

SMALL_P = 65537  # smallest prime the field accepts; fine for brute-force checks


@pytest.fixture(scope="session")
def bn254():
    d = json.loads(data_path("config", "defaults.json").read_text())
    return FieldModulus(int(d["modulus"]), d["modulus_name"])


@pytest.fixture(scope="session")
def small():
    return FieldModulus(SMALL_P, "small")


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
