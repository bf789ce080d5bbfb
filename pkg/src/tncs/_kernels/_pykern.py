"""Pure-numpy kernel implementations.

Mirror of the compiled backend; every routine works in any gauge and guards
against scale drift by renormalizing transfer environments as it goes (only
trace-normalized or ratio quantities leave these functions, so the interim
rescaling cancels exactly).
"""

from __future__ import annotations

import numpy as np

_LOG_FLOOR = -745.0  # ln of the smallest positive double


def site_rdms(tensors: list) -> np.ndarray:
    """All single-site reduced density matrices of the chain.

    Args:
        tensors: list of (2, left, right) float64 arrays; any gauge.

    Returns:
        (n, 2, 2) array, each matrix symmetric with unit trace.
    """
    n = len(tensors)
    rights = [None] * (n + 1)
    env = np.ones((1, 1))
    rights[n] = env
    for i in range(n - 1, 0, -1):
        a = tensors[i]
        env = a[0] @ env @ a[0].T + a[1] @ env @ a[1].T
        env = env / np.trace(env)
        rights[i] = env

    out = np.empty((n, 2, 2))
    left = np.ones((1, 1))
    for i in range(n):
        a = tensors[i]
        right = rights[i + 1]
        x0 = a[0].T @ left
        x1 = a[1].T @ left
        r00 = float(np.sum((x0 @ a[0]) * right))
        r01 = float(np.sum((x0 @ a[1]) * right))
        r11 = float(np.sum((x1 @ a[1]) * right))
        tr = r00 + r11
        out[i, 0, 0] = r00 / tr
        out[i, 0, 1] = r01 / tr
        out[i, 1, 0] = r01 / tr
        out[i, 1, 1] = r11 / tr
        if i < n - 1:
            left = a[0].T @ left @ a[0] + a[1].T @ left @ a[1]
            left = left / np.trace(left)
    return out


def log_norm_sq(tensors: list) -> float:
    """ln <psi|psi> via the transfer contraction, stable at any length."""
    env = np.ones((1, 1))
    acc = 0.0
    for a in tensors:
        env = a[0].T @ env @ a[0] + a[1].T @ env @ a[1]
        tr = float(np.trace(env))
        if tr <= 0.0:
            return -np.inf
        env = env / tr
        acc += np.log(tr)
    return acc


def logamp_batch(tensors: list, states: np.ndarray):
    """Batched zipper overlap <psi|phi_i> in the log domain.

    Args:
        tensors: chain of (2, left, right) arrays.
        states: (batch, n, 2) per-site qubit amplitudes of the product states.

    Returns:
        (logmag, sign): log |overlap| (-inf for exact zeros) and its sign.
    """
    b = states.shape[0]
    vec = np.ones((b, 1))
    acc = np.zeros(b)
    for i, a in enumerate(tensors):
        mats = np.einsum("bs,slr->blr", states[:, i, :], a)
        vec = np.einsum("bl,blr->br", vec, mats)
        scale = np.linalg.norm(vec, axis=1)
        dead = scale == 0.0
        acc = np.where(dead, -np.inf, acc + np.log(np.where(dead, 1.0, scale)))
        vec = vec / np.where(dead, 1.0, scale)[:, None]
    final = vec[:, 0]
    zero = final == 0.0
    logmag = np.where(zero, -np.inf, acc + np.log(np.abs(np.where(zero, 1.0, final))))
    return logmag, np.sign(final)


def sample_bits(tensors: list, uniforms: np.ndarray) -> np.ndarray:
    """Autoregressive sigma-z sampling of the Born distribution.

    Walks the chain left to right keeping a bra vector per trajectory; the
    right transfer environments supply the marginal weights, so each bit is
    drawn from the exact conditional distribution given the bits before it.

    Args:
        tensors: chain of (2, left, right) arrays.
        uniforms: (batch, n) pre-drawn uniforms deciding each outcome.

    Returns:
        (batch, n) uint8 array of sampled bits.
    """
    n = len(tensors)
    b = uniforms.shape[0]
    rights = [None] * (n + 1)
    env = np.ones((1, 1))
    rights[n] = env
    for i in range(n - 1, 0, -1):
        a = tensors[i]
        env = a[0] @ env @ a[0].T + a[1] @ env @ a[1].T
        env = env / np.trace(env)
        rights[i] = env

    bits = np.empty((b, n), dtype=np.uint8)
    vec = np.ones((b, 1))
    for i in range(n):
        a = tensors[i]
        right = rights[i + 1]
        w0 = vec @ a[0]
        w1 = vec @ a[1]
        p0 = np.maximum(np.einsum("br,rq,bq->b", w0, right, w0), 0.0)
        p1 = np.maximum(np.einsum("br,rq,bq->b", w1, right, w1), 0.0)
        take1 = uniforms[:, i] * (p0 + p1) >= p0
        bits[:, i] = take1
        vec = np.where(take1[:, None], w1, w0)
        vec = vec / np.linalg.norm(vec, axis=1)[:, None]
    return bits
