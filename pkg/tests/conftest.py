import numpy as np
import pytest

from ldlab.convex import HalfSpace, HPolytope
from ldlab.measures import Atomic, AtomicMeasure, FiniteAlphabet, Gaussian


@pytest.fixture
def bernoulli_half():
    return AtomicMeasure(np.array([0.0, 1.0]), weights=[0.5, 0.5])


@pytest.fixture
def rademacher():
    return AtomicMeasure(np.array([-1.0, 1.0]), weights=[0.5, 0.5])


@pytest.fixture
def three_atoms():
    return AtomicMeasure(np.array([0.0, 1.0, 3.0]), weights=[1 / 3, 1 / 3, 1 / 3])


@pytest.fixture
def std_gaussian():
    return Gaussian([0.0], [1.0])


def singleton(value: float) -> HPolytope:
    """The degenerate 1-d interval {value} as a closed H-polytope."""
    return HPolytope(
        (
            HalfSpace(np.array([1.0]), value),
            HalfSpace(np.array([-1.0]), -value),
        )
    )


@pytest.fixture
def origin_singleton():
    return singleton(0.0)
