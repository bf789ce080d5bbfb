"""Unsupervised training of the MPS Born machine.

The loss is the negative log-likelihood of the training images under the
Born distribution,

    f = ln <psi|psi> - (1/K) * sum_i ln |<psi|phi_i>|^2,

with K the number of training samples and phi_i the product state of image
i. Tensors are updated one site at a time by plain gradient descent while
the orthogonality center sweeps left-to-right and back; keeping the center
on the updated site makes the norm term local. A sweep that raises the
full-dataset NLL is rolled back and retried with half the step size (up to
8 halvings), so the recorded history is nonincreasing.

Per-sample environments are cached along the sweep and renormalized with
per-sample log scales, so gradients stay exact at any chain length; the
scale factors cancel in the environment/amplitude ratios.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import ArgumentError, InfiniteNLLError, TrainingDivergedError
from .features import pixel_state_array
from .mps import MPS, _qr_pos

log = logging.getLogger(__name__)

_LOG_ZERO_PROB = math.log(1e-300)
_MAX_HALVINGS = 8


@dataclass
class TrainConfig:
    """Hyperparameters for a training run.

    batch = 0 uses the full dataset for every gradient; otherwise each sweep
    draws that many samples without replacement. tol = 0 disables early
    stopping on the NLL change between accepted sweeps.
    """

    chi_max: int
    tau: float
    sweeps: int
    batch: int = 0
    seed: int = 0
    tol: float = 0.0

    def __post_init__(self):
        if self.chi_max < 1:
            raise ArgumentError("chi_max must be >= 1")
        if not self.tau > 0.0:
            raise ArgumentError("tau must be positive")
        if self.sweeps < 1:
            raise ArgumentError("sweeps must be >= 1")
        if self.batch < 0:
            raise ArgumentError("batch must be >= 0")


@dataclass
class TrainReport:
    """Loss trajectory of a run; entry 0 is the pre-training NLL."""

    nll_history: list = field(default_factory=list)
    final_nll: float = math.inf
    sweeps_run: int = 0


def _dataset_states(dataset, n_sites: int) -> np.ndarray:
    if len(dataset) == 0:
        raise ArgumentError("dataset is empty")
    pixels = []
    for i, img in enumerate(dataset):
        if img.n_pixels != n_sites:
            raise ArgumentError(
                f"image {i} has {img.n_pixels} pixels, model expects {n_sites}"
            )
        pixels.append(img.pixels)
    return pixel_state_array(np.stack(pixels))


def nll(mps: MPS, dataset) -> float:
    """Negative log-likelihood of the dataset under the Born machine.

    Computed in the log domain; the norm term is evaluated explicitly so the
    value is bitwise reproducible whether or not the state is canonical.

    Raises:
        InfiniteNLLError: some sample has probability below 1e-300; the
            exception names the offending sample index.
    """
    states = _dataset_states(dataset, mps.n_active)
    logz = mps.log_norm_sq()
    logmag, _ = _kernels.logamp_batch(mps._chain(), states)
    logp = 2.0 * logmag
    bad = np.flatnonzero(logp < _LOG_ZERO_PROB)
    if bad.size:
        raise InfiniteNLLError(
            f"sample {int(bad[0])} has vanishing probability",
            sample_index=int(bad[0]),
        )
    return float(logz - logp.mean())


def _zip_step(vecs, logs, tensor, states):
    """Advance normalized per-sample environments through one site."""
    mats = np.einsum("bs,slr->blr", states, tensor)
    out = np.einsum("bl,blr->br", vecs, mats)
    scale = np.linalg.norm(out, axis=1)
    dead = scale == 0.0
    logs = np.where(dead, -np.inf, logs + np.log(np.where(dead, 1.0, scale)))
    return out / np.where(dead, 1.0, scale)[:, None], logs


def _zip_step_right(vecs, logs, tensor, states):
    mats = np.einsum("bs,slr->blr", states, tensor)
    out = np.einsum("blr,br->bl", mats, vecs)
    scale = np.linalg.norm(out, axis=1)
    dead = scale == 0.0
    logs = np.where(dead, -np.inf, logs + np.log(np.where(dead, 1.0, scale)))
    return out / np.where(dead, 1.0, scale)[:, None], logs


def _site_gradient(tensor, states, lenv, renv, llog, rlog, sample_ids):
    """Gradient of the NLL with respect to the center-site tensor.

    ``lenv``/``renv`` are row-normalized per-sample environments with their
    log scales; the scales cancel between environment and amplitude, so only
    the zero-probability check needs them.
    """
    mats = np.einsum("bs,slr->blr", states, tensor)
    amp = np.einsum("bl,blr,br->b", lenv, mats, renv)
    with np.errstate(divide="ignore"):
        true_log = np.where(amp == 0.0, -np.inf, np.log(np.abs(amp))) + llog + rlog
    bad = np.flatnonzero(2.0 * true_log < _LOG_ZERO_PROB)
    if bad.size:
        raise InfiniteNLLError(
            f"sample {int(sample_ids[bad[0]])} has vanishing probability",
            sample_index=int(sample_ids[bad[0]]),
        )
    weights = 1.0 / amp
    data = np.einsum("b,bs,bl,br->slr", weights, states, lenv, renv)
    norm_sq = float(np.sum(tensor * tensor))
    return 2.0 * tensor / norm_sq - (2.0 / amp.size) * data


def gradient_site(mps: MPS, batch, n: int) -> np.ndarray:
    """Gradient of the NLL with respect to the tensor at site ``n``.

    The orthogonality center must already sit at ``n`` so that the norm term
    is the local Frobenius norm.
    """
    if mps.center != n:
        raise ArgumentError(f"orthogonality center must be at site {n}")
    states = _dataset_states(batch, mps.n_active)
    chain = mps._chain()
    pos = mps._pos(n)
    b = states.shape[0]
    lenv, llog = np.ones((b, 1)), np.zeros(b)
    for j in range(pos):
        lenv, llog = _zip_step(lenv, llog, chain[j], states[:, j, :])
    renv, rlog = np.ones((b, 1)), np.zeros(b)
    for j in range(len(chain) - 1, pos, -1):
        renv, rlog = _zip_step_right(renv, rlog, chain[j], states[:, j, :])
    return _site_gradient(
        chain[pos], states[:, pos, :], lenv, renv, llog, rlog, np.arange(b)
    )


def _sweep_once(mps: MPS, states: np.ndarray, tau: float, sample_ids) -> None:
    """One left-to-right plus right-to-left gradient pass, in place.

    Expects the center on the first active site; leaves it there, with every
    visited tensor renormalized after its update.
    """
    idx = mps.active_sites
    chain = mps._chain()
    n = len(chain)
    b = states.shape[0]

    renvs = [None] * (n + 1)
    rlogs = [None] * (n + 1)
    renvs[n], rlogs[n] = np.ones((b, 1)), np.zeros(b)
    for j in range(n - 1, 0, -1):
        renvs[j], rlogs[j] = _zip_step_right(
            renvs[j + 1], rlogs[j + 1], chain[j], states[:, j, :]
        )

    lenv, llog = np.ones((b, 1)), np.zeros(b)
    for pos in range(n):
        a = chain[pos]
        grad = _site_gradient(
            a, states[:, pos, :], lenv, renvs[pos + 1], llog, rlogs[pos + 1], sample_ids
        )
        a = a - tau * grad
        a /= np.linalg.norm(a)
        if pos < n - 1:
            d, dl, dr = a.shape
            q, r = _qr_pos(a.reshape(d * dl, dr))
            chain[pos] = np.ascontiguousarray(q.reshape(d, dl, q.shape[1]))
            chain[pos + 1] = np.ascontiguousarray(
                np.einsum("ab,sbc->sac", r, chain[pos + 1])
            )
            lenv, llog = _zip_step(lenv, llog, chain[pos], states[:, pos, :])
        else:
            chain[pos] = np.ascontiguousarray(a)

    lenvs = [None] * (n + 1)
    llogs = [None] * (n + 1)
    lenvs[0], llogs[0] = np.ones((b, 1)), np.zeros(b)
    for j in range(n - 1):
        lenvs[j + 1], llogs[j + 1] = _zip_step(
            lenvs[j], llogs[j], chain[j], states[:, j, :]
        )

    renv, rlog = np.ones((b, 1)), np.zeros(b)
    for pos in range(n - 1, -1, -1):
        a = chain[pos]
        grad = _site_gradient(
            a, states[:, pos, :], lenvs[pos], renv, llogs[pos], rlog, sample_ids
        )
        a = a - tau * grad
        a /= np.linalg.norm(a)
        if pos > 0:
            d, dl, dr = a.shape
            m = a.transpose(1, 0, 2).reshape(dl, d * dr)
            q, r = _qr_pos(m.T)
            chain[pos] = np.ascontiguousarray(
                q.T.reshape(q.shape[1], d, dr).transpose(1, 0, 2)
            )
            chain[pos - 1] = np.ascontiguousarray(
                np.einsum("sab,bc->sac", chain[pos - 1], r.T)
            )
            renv, rlog = _zip_step_right(renv, rlog, chain[pos], states[:, pos, :])
        else:
            chain[pos] = np.ascontiguousarray(a)

    for j, i in enumerate(idx):
        mps.tensors[i] = chain[j]
    mps.center = idx[0]


def train(dataset, cfg: TrainConfig) -> tuple[MPS, TrainReport]:
    """Fit a Born machine to the dataset by alternating gradient sweeps.

    Returns the trained state (canonical, normalized, bonds capped at
    cfg.chi_max) and the loss report. Emits one log line per accepted sweep
    in the form ``sweep=<k> nll=<val> tau=<val>``.

    Raises:
        TrainingDivergedError: the NLL stayed non-finite after all step-size
            retries; the partial report rides on the exception.
    """
    n_sites = dataset[0].n_pixels if len(dataset) else 0
    states = _dataset_states(dataset, n_sites)
    k_total = states.shape[0]
    rng = np.random.default_rng(cfg.seed)

    mps = MPS.random(n_sites, cfg.chi_max, seed=cfg.seed)
    report = TrainReport()
    current = nll(mps, dataset)
    report.nll_history.append(current)

    tau = cfg.tau
    batch_size = cfg.batch if 0 < cfg.batch < k_total else k_total
    for sweep in range(1, cfg.sweeps + 1):
        if batch_size == k_total:
            sample_ids = np.arange(k_total)
        else:
            sample_ids = rng.permutation(k_total)[:batch_size]
        batch_states = states[sample_ids]

        accepted = False
        candidate_nll = math.inf
        for _ in range(_MAX_HALVINGS + 1):
            work = mps.copy()
            try:
                _sweep_once(work, batch_states, tau, sample_ids)
                candidate_nll = nll(work, dataset)
            except InfiniteNLLError:
                candidate_nll = math.inf
            if candidate_nll <= current:
                accepted = True
                break
            tau *= 0.5
        if not accepted:
            if not math.isfinite(candidate_nll):
                report.final_nll = current
                raise TrainingDivergedError(
                    "loss non-finite after step-size retries", report=report
                )
            break

        mps = work
        delta = current - candidate_nll
        current = candidate_nll
        report.nll_history.append(current)
        log.info("sweep=%d nll=%.12g tau=%g", sweep, current, tau)
        if cfg.tol > 0.0 and delta < cfg.tol:
            break
        # recover step size slowly after accepted sweeps, capped at the
        # configured value, so one early rollback does not stall the run
        tau = min(tau * 1.2, cfg.tau)

    report.final_nll = current
    report.sweeps_run = len(report.nll_history) - 1
    mps.chi_max = cfg.chi_max
    return mps, report
