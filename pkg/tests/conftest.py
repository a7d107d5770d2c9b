import numpy as np
import pytest

from rws.fields import KernelElement, SpectralField, TorusProfile
from rws.operators import OperatorWorkspace, eigen_table


@pytest.fixture
def ws():
    return OperatorWorkspace()


@pytest.fixture
def small_ws():
    return OperatorWorkspace(L=6, J=6, nt=32, nx=16)


@pytest.fixture
def rng():
    return np.random.default_rng(0)


def random_profile(rng, M=8, scale=1.0):
    """Zero-mean torus profile with random coefficients, decaying in m."""
    m = np.arange(1, M + 1)
    pos = (rng.standard_normal(M) + 1j * rng.standard_normal(M)) * scale / (1 + m**2)
    return KernelElement(TorusProfile.from_coefficients(pos))


def random_range_field(rng, L, J, scale=1.0, decay=2.0):
    """Real spectral field supported off the kernel modes."""
    _, kernel = eigen_table(L, J)
    c = (
        rng.standard_normal((2 * L + 1, J)) + 1j * rng.standard_normal((2 * L + 1, J))
    ) * scale
    ll = np.arange(-L, L + 1)[:, None]
    jj = np.arange(1, J + 1)[None, :]
    c /= (1.0 + ll**2 + jj**2) ** (decay / 2)
    c = 0.5 * (c + np.conj(c[::-1, :]))
    c[kernel] = 0.0
    return SpectralField(c, L, J)


def random_band_limited(rng, L, J, scale=1.0, decay=2.0):
    """Real spectral field with kernel and range content."""
    c = (
        rng.standard_normal((2 * L + 1, J)) + 1j * rng.standard_normal((2 * L + 1, J))
    ) * scale
    ll = np.arange(-L, L + 1)[:, None]
    jj = np.arange(1, J + 1)[None, :]
    c /= (1.0 + ll**2 + jj**2) ** (decay / 2)
    c = 0.5 * (c + np.conj(c[::-1, :]))
    return SpectralField(c, L, J)
