import numpy as np
import pytest

from nsvlab.fields import Lattice, random_band_limited, taylor_green


@pytest.fixture(scope="session")
def lat8():
    return Lattice(8)


@pytest.fixture(scope="session")
def lat16():
    return Lattice(16)


@pytest.fixture(scope="session")
def lat32():
    return Lattice(32)


@pytest.fixture(scope="session")
def tg16(lat16):
    return taylor_green(lat16)


@pytest.fixture(scope="session")
def random16(lat16):
    # band-limited to n/3 so every product in the suite is alias-free
    return random_band_limited(lat16, 1.0, lat16.k_unit * (16 // 3), 1.5, seed=404)


def dft_oracle(coefficients: np.ndarray, period: float) -> np.ndarray:
    """Direct evaluation of sum_k c_k e^{ik.x} on the grid; O(n^6)."""
    n = coefficients.shape[0]
    modes = np.fft.fftfreq(n, d=1.0 / n).astype(int)
    x = np.arange(n) * (period / n)
    phase = np.exp(2j * np.pi / period * np.outer(modes, x))  # (mode, point)
    out = np.einsum("abc,ax,by,cz->xyz", coefficients, phase, phase, phase)
    return out
