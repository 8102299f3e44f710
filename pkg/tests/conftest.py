import numpy as np
import pytest

from pairpol.linalg import DensityMatrix
from pairpol.tomography import rho_from_params


@pytest.fixture
def rng():
    return np.random.default_rng(2024)


def random_density_matrix(rng, dim) -> DensityMatrix:
    """Random physical state from Gaussian Cholesky parameters."""
    return rho_from_params(rng.standard_normal(dim * dim), dim)


def random_unitary(rng, dim) -> np.ndarray:
    """Haar-ish random unitary from the QR of a complex Gaussian matrix."""
    z = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))
