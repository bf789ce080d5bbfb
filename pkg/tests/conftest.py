"""Shared fixtures: golden states and small random ensembles."""

import numpy as np
import pytest

from tncs import Image, MPS

LN2 = float(np.log(2.0))
S34 = 0.5623351446188083  # -(1/4)ln(1/4) - (3/4)ln(3/4)


def paired4_vector() -> np.ndarray:
    """Product of two entangled pairs over four qubits.

    (r2/2 |01> + r2/2 |10>) x (1/2 |01> + r3/2 |10>), i.e. coefficients
    r2/4, r6/4, r2/4, r6/4 on 0101, 0110, 1001, 1010.
    """
    pair1 = np.zeros(4)
    pair1[0b01] = np.sqrt(2.0) / 2.0
    pair1[0b10] = np.sqrt(2.0) / 2.0
    pair2 = np.zeros(4)
    pair2[0b01] = 0.5
    pair2[0b10] = np.sqrt(3.0) / 2.0
    return np.kron(pair1, pair2)


@pytest.fixture
def paired4() -> MPS:
    return MPS.from_statevector(paired4_vector())


@pytest.fixture
def paired4_vec() -> np.ndarray:
    return paired4_vector()


def paired4_multiset() -> list:
    """The 8-image multiset whose Born distribution is the paired state."""
    return (
        [Image([0, 1, 0, 1], 4, 1)]
        + [Image([0, 1, 1, 0], 4, 1)] * 3
        + [Image([1, 0, 0, 1], 4, 1)]
        + [Image([1, 0, 1, 0], 4, 1)] * 3
    )


@pytest.fixture
def multiset8() -> list:
    return paired4_multiset()


def random_nonneg_mps(n_sites: int, chi: int, seed: int) -> MPS:
    """Seeded random MPS with nonnegative entries, canonicalized at 0."""
    return MPS.random(n_sites, chi, seed=seed)


def random_signed_mps(n_sites: int, chi: int, seed: int) -> MPS:
    """Random MPS with signed entries for gauge/oracle stress tests."""
    rng = np.random.default_rng(seed)
    mps = MPS.random(n_sites, chi, seed=seed)
    tensors = [rng.standard_normal(t.shape) for t in mps.tensors]
    return MPS(tensors).canonicalize(0)
