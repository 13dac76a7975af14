from __future__ import annotations

import pathlib
import sys

import pytest

sys.path.insert(0, str(pathlib.Path(__file__).parent))

from weightgen import load

FIXTURES = pathlib.Path(__file__).parent.parent / "fixtures"


def fixture_path(name: str) -> str:
    return str(FIXTURES / name)


@pytest.fixture(scope="session")
def motzkin():
    return load(fixture_path("motzkin.gram"))[0]


@pytest.fixture(scope="session")
def fibonacci():
    return load(fixture_path("fibonacci.gram"))[0]


@pytest.fixture(scope="session")
def motif():
    return load(fixture_path("motif.gram"))[0]


@pytest.fixture(scope="session")
def quadtree():
    return load(fixture_path("quadtree.gram"))[0]


@pytest.fixture(scope="session")
def arithmetic():
    return load(fixture_path("arithmetic.gram"))[0]


@pytest.fixture(scope="session")
def stemloops():
    return load(fixture_path("stemloops.gram"))[0]


@pytest.fixture(scope="session")
def rna():
    return load(fixture_path("rna.gram"))[0]


@pytest.fixture(scope="session")
def rna_helix():
    return load(fixture_path("rna_helix.gram"))[0]


@pytest.fixture(scope="session")
def rna_loops():
    return load(fixture_path("rna_loops.gram"))[0]
