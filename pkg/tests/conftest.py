import os
import tempfile
from pathlib import Path

# db.py binds its engine at import time
os.environ.setdefault("DATABASE_URL", f"sqlite:///{tempfile.mkdtemp()}/packflow-test.db")

import numpy as np
import pytest

from mesh import build, twins_from_faces
from packing_geometry import Packing
from schemas import load_problem, read_problem

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


def fixture_path(name: str) -> Path:
    return FIXTURES / f"{name}.json"


def load_packing(name: str) -> Packing:
    return load_problem(read_problem(fixture_path(name))).packing


def pentagon_sphere():
    """Six-vertex sphere: a fan of three triangles on the pentagon 0..4, capped by apex 5 below."""
    top = [(0, 1, 2), (0, 2, 3), (0, 3, 4)]
    bottom = [(i + 1, i, 5) for i in range(4)] + [(0, 4, 5)]
    faces = top + bottom
    return build(6, faces, twins_from_faces(faces))


@pytest.fixture
def torus1():
    return load_packing("torus1")


@pytest.fixture
def torus2():
    return load_packing("torus2")


@pytest.fixture
def sphere3():
    return load_packing("sphere3")


@pytest.fixture
def genus2():
    return load_packing("genus2")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
