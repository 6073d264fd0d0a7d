"""
Shared fixtures: planes and ladders are expensive, so they are built once per
session. Modules import from ``core`` with ``solver/`` on sys.path.
"""

import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from core.plane import build_plane, parse_model_shorthand
from core.spectrum import find_ladder

FOURIER_MODEL = "fourier:a0=1,k2a=0.1,k4b=0.02"


def _plane(text, n=2048):
    return build_plane(parse_model_shorthand(text), n)


@pytest.fixture(scope="session")
def euclidean_field():
    return _plane("euclidean", 1024)


@pytest.fixture(scope="session")
def ellipse_field():
    return _plane("ellipse:2,1", 1024)


@pytest.fixture(scope="session")
def fourier_field():
    return _plane(FOURIER_MODEL, 1024)


@pytest.fixture(scope="session")
def lp3_field():
    return _plane("lp:3")


@pytest.fixture(scope="session")
def lp4_field():
    return _plane("lp:4")


@pytest.fixture(scope="session")
def euclidean_ladder(euclidean_field):
    return find_ladder(euclidean_field, k_max=8)


@pytest.fixture(scope="session")
def ellipse_ladder(ellipse_field):
    return find_ladder(ellipse_field, k_max=7)


@pytest.fixture(scope="session")
def fourier_ladder(fourier_field):
    return find_ladder(fourier_field, k_max=6)


@pytest.fixture(scope="session")
def lp3_ladder(lp3_field):
    return find_ladder(lp3_field, k_max=8)


@pytest.fixture(scope="session")
def lp4_ladder(lp4_field):
    return find_ladder(lp4_field, k_max=7)


@pytest.fixture(scope="session", params=["euclidean", "ellipse", "fourier", "lp3"])
def any_plane(request):
    """(field, ladder) for every built-in family"""
    name = request.param
    return (request.getfixturevalue(f"{name}_field"), request.getfixturevalue(f"{name}_ladder"))


@pytest.fixture
def rng():
    return np.random.default_rng(2024)
