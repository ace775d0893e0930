"""Shared helpers: reproducible band-limited real data on small grids."""

import numpy as np
import pytest

from fdbo.spectral import Grid, SpectralField, l2_norm


def make_datum(grid: Grid, band: int, seed: int, size: float = 1.0,
               decay: float = 0.0) -> SpectralField:
    """Real field with random modes 1..band, rescaled to L2 norm ``size``.

    ``decay`` damps mode k by exp(-decay k); keep 0 for flat bands.
    """
    rng = np.random.default_rng(seed)
    coeffs = np.zeros(grid.n_modes, dtype=complex)
    for k in range(1, int(band) + 1):
        z = (rng.normal() + 1j * rng.normal()) * np.exp(-decay * k)
        coeffs[k] = z
        coeffs[-k] = np.conj(z)
    u = SpectralField(grid, coeffs)
    return SpectralField(grid, coeffs * (size / l2_norm(u)))


@pytest.fixture
def grid():
    return Grid(128, 2.0 * np.pi)


@pytest.fixture
def datum(grid):
    return make_datum(grid, band=10, seed=7, size=0.5)
