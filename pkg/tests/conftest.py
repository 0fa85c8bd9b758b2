from __future__ import annotations

import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

import helpers  # noqa: E402


@pytest.fixture
def c3():
    return helpers.circle(3)


@pytest.fixture
def c6():
    return helpers.circle(6)


@pytest.fixture
def disk():
    return helpers.single_triangle()


@pytest.fixture
def rp2():
    return helpers.projective_plane()


@pytest.fixture
def torus():
    return helpers.torus_seven()


@pytest.fixture
def ico():
    return helpers.icosahedron()
