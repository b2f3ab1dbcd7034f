import numpy as np
import pytest

from muellerkit import synth


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def unit3(rng: np.random.Generator) -> np.ndarray:
    """Random unit 3-vector with |v| <= 1 guaranteed in floats."""
    v = rng.normal(size=3)
    v /= np.linalg.norm(v)
    n = np.linalg.norm(v)
    return v / n if n > 1.0 else v


@pytest.fixture
def small_physical_cube():
    return synth.random_physical_cube(6, 5, seed=13, wavelengths=[500.0, 600.0])
