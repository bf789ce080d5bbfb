"""Exact small-system oracles: full state vectors, brute-force local density
matrices, and the conditional Shannon entropy by exhaustive enumeration.

Everything here scales exponentially and is guarded at 20 active qubits; it
exists to verify the chain contractions and greedy decoders against direct
dense linear algebra, and to evaluate entropies that are only defined by
enumeration.
"""

from __future__ import annotations

import math
from typing import Mapping

import numpy as np

from .errors import ArgumentError
from .features import pixel_to_state
from .mps import MPS

_MAX_QUBITS = 20
_EIG_CLIP = 1e-14


def to_statevector(mps: MPS) -> np.ndarray:
    """Dense coefficient vector of the active chain.

    Basis order is lexicographic with the first active site as the most
    significant bit. Refuses more than 20 active sites.
    """
    n = mps.n_active
    if n > _MAX_QUBITS:
        raise ArgumentError(f"refusing to expand {n} qubits (limit {_MAX_QUBITS})")
    psi = np.ones((1, 1))
    for a in mps._chain():
        psi = np.einsum("pb,sbc->psc", psi, a).reshape(-1, a.shape[2])
    return psi[:, 0]


def statevector_rdm(vec: np.ndarray, pos: int) -> np.ndarray:
    """Single-site reduced density matrix from a dense state vector."""
    v = np.asarray(vec, dtype=np.float64).ravel()
    n = int(round(math.log2(v.size)))
    v = v / np.linalg.norm(v)
    block = v.reshape(2 ** pos, 2, 2 ** (n - pos - 1))
    return np.einsum("asb,atb->st", block, block)


def statevector_see(vec: np.ndarray, pos: int) -> float:
    """Entanglement entropy of one site from a dense state vector."""
    lam = np.linalg.eigvalsh(statevector_rdm(vec, pos))
    lam = np.clip(lam, 0.0, 1.0)
    lam = lam[lam > _EIG_CLIP]
    return float(-(lam * np.log(lam)).sum())


def statevector_project(vec: np.ndarray, pos: int, state) -> tuple[np.ndarray, float]:
    """Project one site of a dense state vector; returns (new vector, C)."""
    v = np.asarray(vec, dtype=np.float64).ravel()
    s = np.asarray(state, dtype=np.float64).ravel()
    n = int(round(math.log2(v.size)))
    block = v.reshape(2 ** pos, 2, 2 ** (n - pos - 1))
    projected = np.einsum("s,asb->ab", s, block).ravel()
    c = float(np.linalg.norm(projected))
    if c == 0.0:
        return projected, 0.0
    return projected / c, c


def shannon_conditional(mps: MPS, sent: Mapping[int, float]) -> float:
    """Shannon entropy (nats) of the rest-pixel distribution given ``sent``.

    Projects each sent pixel through the feature map, then enumerates every
    binary configuration of the remaining active sites. Gray sent values are
    allowed; the rest is enumerated over {0, 1}.

    Raises:
        ArgumentError: more than 20 sites would need enumeration.
        ZeroProbabilityError: the sent configuration itself has zero
            probability.
    """
    work = mps.copy()
    for site in sorted(sent):
        state = pixel_to_state(float(sent[site]))
        work, _ = work.project_site(site, state)
    vec = to_statevector(work)
    p = vec * vec
    total = p.sum()
    if total <= 0.0:
        return 0.0
    p = p / total
    p = p[p > _EIG_CLIP]
    return float(-(p * np.log(p)).sum())
