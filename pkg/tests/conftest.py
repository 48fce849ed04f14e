import numpy as np
import pytest

from fpme.mesh import build_structured_rect_mesh


@pytest.fixture(scope="session")
def unit_square_2x2():
    return build_structured_rect_mesh((0, 1, 0, 1), 2, 2)


@pytest.fixture(scope="session")
def unit_square_8x8():
    return build_structured_rect_mesh((0, 1, 0, 1), 8, 8)


@pytest.fixture(scope="session")
def tiny_mesh():
    """The 4-vertex, 2-element split of the unit square."""
    return build_structured_rect_mesh((0, 1, 0, 1), 1, 1)


@pytest.fixture
def rng():
    return np.random.default_rng(20240613)
