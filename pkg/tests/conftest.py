import numpy as np
import pytest

from endpoint_lab.grid import Grid, Spectrum, inverse_transform


def random_bandlimited(grid, seed, band=None, complex_valued=True):
    """Random smooth function whose spectrum lives on |xi| < band (default: half the grid band)."""
    rng = np.random.default_rng(seed)
    band = grid.bandwidth / 2 if band is None else band
    c = rng.standard_normal(grid.M)
    if complex_valued:
        c = c + 1j * rng.standard_normal(grid.M)
    c = np.where(np.abs(grid.xi) < band, c, 0.0)
    return inverse_transform(Spectrum(grid, c))


@pytest.fixture
def small_grid():
    return Grid(8.0, 256)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
