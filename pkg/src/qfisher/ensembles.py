"""Random states, observables and POVMs for property checks."""

import numpy as np

from .channel import random_channel, random_unitary  # noqa: F401
from .estimation import POVM
from .su_basis import ObservableRepr, build_generators, state_to_bloch


def random_density_matrix(dim: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Ginibre-distributed density matrix (full rank unless ``rank`` is given)."""
    z = rng.normal(size=(dim, rank or dim)) + 1j * rng.normal(size=(dim, rank or dim))
    rho = z @ z.conj().T
    return rho / np.trace(rho).real


def random_bloch_vector(dim: int, rng: np.random.Generator) -> np.ndarray:
    return state_to_bloch(random_density_matrix(dim, rng), build_generators(dim))


def random_observable(dim: int, rng: np.random.Generator) -> ObservableRepr:
    return ObservableRepr(rng.normal(), rng.normal(size=dim * dim - 1))


def random_povm(dim: int, n_outcomes: int, rng: np.random.Generator) -> POVM:
    """``E_k = M_k^dag M_k`` from the blocks of a random isometry."""
    z = rng.normal(size=(n_outcomes * dim, dim)) + 1j * rng.normal(size=(n_outcomes * dim, dim))
    iso, _ = np.linalg.qr(z)
    blocks = iso.reshape(n_outcomes, dim, dim)
    elements = np.einsum("kji,kjl->kil", blocks.conj(), blocks)
    return POVM.from_elements(elements)
