from fractions import Fraction

import pytest

from pcmap import affine_map, load_fixture


@pytest.fixture
def f1():
    return load_fixture("f1")


@pytest.fixture
def f2():
    return load_fixture("f2")


@pytest.fixture
def golden():
    return load_fixture("golden")


@pytest.fixture
def sqrt_golden():
    return load_fixture("sqrt_golden")


@pytest.fixture
def involution():
    return load_fixture("flip_involution")


def rational_rotation(alpha):
    """Rotation by ``alpha`` as an exact two-piece map."""
    a = Fraction(alpha)
    return affine_map([1 - a], [(1, a), (1, a - 1)])
