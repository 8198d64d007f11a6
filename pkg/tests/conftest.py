import json
from fractions import Fraction as F
from pathlib import Path

import pytest
from hypothesis import settings

from geodesy.core import GeodesicCurve
from geodesy.normed import PiecewiseFunction, PiecewiseFunctionSpace, PNormSpace, StepFunctionSpace

settings.register_profile("repo", derandomize=True, deadline=None, max_examples=60)
settings.load_profile("repo")

FROZEN = json.loads((Path(__file__).parent / "oracles" / "frozen.json").read_text())


@pytest.fixture(scope="session")
def frozen():
    return FROZEN


@pytest.fixture
def l1():
    return PNormSpace(2, 1)


@pytest.fixture
def l2():
    return PNormSpace(2, 2)


@pytest.fixture
def step4():
    return StepFunctionSpace.uniform(4, 1)


@pytest.fixture
def pwfun():
    return PiecewiseFunctionSpace(1)


@pytest.fixture
def two_leg(l1):
    return GeodesicCurve(l1, ((F(0), (F(0), F(0))), (F(1, 2), (F(1), F(0))), (F(1), (F(1), F(1)))))


@pytest.fixture
def reparam(l2):
    """u + s^2 (v - u) with breakpoints at 0, 4/5, 1; affine in between."""
    return GeodesicCurve(l2, ((F(0), (F(0), F(0))), (F(4, 5), (F(16, 25), F(0))), (F(1), (F(1), F(0)))))


@pytest.fixture
def g2x():
    return PiecewiseFunction.polynomial(0, 2)


def P(*xs):
    return tuple(F(x) for x in xs)
