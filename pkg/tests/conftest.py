from __future__ import annotations

from pathlib import Path

import pytest

from morphsynth.morphfile import parse_file

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def team():
    return parse_file(FIXTURES / "team.morph")


@pytest.fixture(scope="session")
def medical():
    return parse_file(FIXTURES / "medical.morph")


@pytest.fixture(scope="session")
def illustrative():
    return parse_file(FIXTURES / "illustrative.morph")
