import numpy as np
import pytest
from hypothesis import settings

from nosemoyal.grid import GridField, PhaseSpaceGrid

settings.register_profile("default", max_examples=25, deadline=None)
settings.load_profile("default")


def random_smooth(grid: PhaseSpaceGrid, rng: np.random.Generator, modes: int = 4) -> GridField:
    """Real periodic field built from a handful of low Fourier modes."""
    coeff = np.zeros(grid.shape, dtype=complex)
    sl = tuple(slice(0, modes) for _ in grid.shape)
    shape = [modes] * grid.ndim
    coeff[sl] = rng.normal(size=shape) + 1j * rng.normal(size=shape)
    return GridField(grid, np.fft.ifftn(coeff).real * grid.size / modes**grid.ndim)


def rel_sup(a, b) -> float:
    a, b = np.asarray(a), np.asarray(b)
    return float(np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-300))


@pytest.fixture
def plane():
    return PhaseSpaceGrid.phase_plane((-7.0, 7.0, 128), (-7.0, 7.0, 128))


@pytest.fixture
def small_plane():
    return PhaseSpaceGrid.phase_plane((-6.0, 6.0, 64), (-6.0, 6.0, 64))


@pytest.fixture
def extended16():
    return PhaseSpaceGrid.extended((-5.0, 5.0, 16), (-3.0, 3.0, 16), (-5.0, 5.0, 16), (-4.0, 4.0, 16))
