import numpy as np
import pytest

from eisenlab.eisenstein import build_orbit
from eisenlab.schottky import build_symmetric_schottky, enumerate_geodesics, estimate_delta


@pytest.fixture(scope="session")
def reference_group():
    return build_symmetric_schottky(2, 0.15)


@pytest.fixture(scope="session")
def reference_delta(reference_group):
    return estimate_delta(reference_group, max_word_length=8)


@pytest.fixture(scope="session")
def reference_orbit(reference_group):
    return build_orbit(reference_group, np.exp(1j * np.pi / 4), 8)


@pytest.fixture(scope="session")
def reference_geodesics(reference_group):
    return enumerate_geodesics(reference_group, 14.0)


@pytest.fixture()
def rng():
    return np.random.default_rng(20240811)


def random_isometry(rng, max_length=2.5):
    """Random hyperbolic-ish disk isometry: rotate, translate, rotate."""
    from eisenlab.geom import DiskIsometry

    a1, a2 = rng.uniform(0, 2 * np.pi, size=2)
    ell = rng.uniform(0.2, max_length)
    return (
        DiskIsometry.rotation(a1)
        @ DiskIsometry.translation(ell)
        @ DiskIsometry.rotation(a2)
    )


def random_point(rng, rmax=0.9):
    r = rmax * np.sqrt(rng.uniform(0, 1))
    return r * np.exp(1j * rng.uniform(0, 2 * np.pi))
