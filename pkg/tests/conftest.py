import numpy as np
import pytest

from landscape_lab import make_grid, model


@pytest.fixture(scope="session")
def desk33():
    """The desk potential on a coarse 33^2 grid (fast, same model)."""
    g = make_grid(2, -0.5, 0.5, 33)
    return g, model.build_potential(g, model.desk_potential_spec())


@pytest.fixture
def rs():
    return np.random.default_rng(1234)
