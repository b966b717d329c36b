"""Shared fixtures for the workbench tests."""
from pathlib import Path

import pytest

from ymgap.app.yangmills import abelian_algebra, su2_algebra, su3_algebra

GOLDEN_DIR = Path(__file__).parent / "golden"


@pytest.fixture(scope="session")
def su2():
    return su2_algebra()


@pytest.fixture(scope="session")
def su3():
    return su3_algebra()


@pytest.fixture(scope="session")
def abelian():
    return abelian_algebra()


@pytest.fixture
def golden():
    def read(name: str) -> str:
        return (GOLDEN_DIR / name).read_text(encoding="utf-8")

    return read
