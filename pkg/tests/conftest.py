import numpy as np
import pytest

from qdfs.passive_model import HamiltonianCoupling, PassiveSystem, realize
from qdfs.synthesis import ScatteringPair


def crand(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def haar_unitary(rng, n):
    q, r = np.linalg.qr(crand(rng, n, n))
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_hermitian(rng, n):
    m = crand(rng, n, n)
    return m + m.conj().T


def random_realized(rng, n=None, channels=("w", "u"), widths=None):
    """Random realizable system built from a Hamiltonian and couplings."""
    n = n or int(rng.integers(1, 5))
    if widths is None:
        widths = [int(rng.integers(1, 3)) for _ in channels]
    hc = HamiltonianCoupling(
        random_hermitian(rng, n),
        tuple((lab, crand(rng, w, n)) for lab, w in zip(channels, widths)),
    )
    return realize(hc)


def random_controller(rng, n, m1, m2, nv=None):
    """Random realizable controller as a PassiveSystem on (y', z', v)."""
    nv = nv if nv is not None else n
    hc = HamiltonianCoupling(
        random_hermitian(rng, n),
        (("y'", crand(rng, m1, n)), ("z'", crand(rng, m2, n)),
         ("v", crand(rng, nv, n))),
    )
    return realize(hc)


def random_scattering(rng, n_w, n_z, n_u):
    total = n_w + n_z
    assert 0 <= n_u <= total
    s = haar_unitary(rng, total)
    w = haar_unitary(rng, total)
    return ScatteringPair(s, w, m1=n_w, n_w=n_w, n_u=n_u)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
