"""Encode/decode pipeline over a trained Born machine.

Encoding projects the model qubit by qubit onto the feature states of the
pixels being sent classically, leaving a measured state over the remaining
sites. Two decoders reconstruct those rest pixels:

- one-shot: autoregressive sigma-z sampling of the measured state, which
  draws the rest configuration from its exact joint Born distribution but is
  limited to black/white values;
- post-selection: greedily fixes the highest-entropy site to the dominant
  eigenstate of its reduced density matrix, yielding a deterministic
  gray-scale completion that approximates the maximal-probability separable
  state.

The F layer scrambles the classically sent pixel bytes with a digest stream
keyed on the rest pixels; it is a protocol demonstration on the classical
channel only, not a security claim.
"""

from __future__ import annotations

import hashlib
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping

import numpy as np

from . import _kernels
from .errors import (
    ArgumentError,
    EncodeImpossibleError,
    FormatError,
    UnclassifiableError,
    ZeroProbabilityError,
)
from .features import Image, pixel_state_array, pixel_to_state, state_to_pixel
from .mps import MPS, dominant_eigenstate, rdm_entropies
from .sampling import SamplingPlan, plan_from_text, plan_to_text


@dataclass
class EncodedMessage:
    """A measured state plus the classically transmitted pixels."""

    phi: MPS
    sent: dict
    plan: SamplingPlan

    def __post_init__(self):
        if list(self.sent.keys()) != self.plan.order[: len(self.sent)]:
            raise ArgumentError("sent pixels must follow the plan order")
        overlap = set(self.sent) & set(self.phi.active_sites)
        if overlap:
            raise ArgumentError(f"sites {sorted(overlap)} both sent and active")


@dataclass
class CipherMessage:
    """Encrypted sent pixels: 8-bit values shifted by a keyed digest stream."""

    y_sent: dict
    plan: SamplingPlan | None = None
    digest_salt: bytes = b""


def encode(mps: MPS, img: Image, plan: SamplingPlan) -> EncodedMessage:
    """Measure the model according to the plan and the image's pixels.

    Each step projects one site onto the feature state of its pixel value
    (generally a non-orthogonal projection for gray pixels) and
    renormalizes.

    Raises:
        EncodeImpossibleError: a projection had zero probability, i.e. the
            model does not recognize the image at that site.
    """
    if img.n_pixels != mps.n_active:
        raise ArgumentError(
            f"image has {img.n_pixels} pixels, model has {mps.n_active} sites"
        )
    n = mps.n_active
    if any(not 0 <= s < n for s in plan.order):
        raise ArgumentError("plan addresses sites outside the model")
    work = mps.copy()
    sent = {}
    for site in plan.order:
        value = float(img.pixels[site])
        state = pixel_to_state(value)
        try:
            work, _ = work.project_site(site, state)
        except ZeroProbabilityError as exc:
            raise EncodeImpossibleError(
                f"image not recognized by the model at site {site}", site=site
            ) from exc
        sent[site] = value
    return EncodedMessage(work, sent, plan)


def sample_bitstrings(mps: MPS, n_samples: int, seed: int) -> np.ndarray:
    """Draw joint sigma-z samples over the active sites of a measured state.

    Sampling is sequential-conditional (site by site, left to right), so the
    bitstrings follow the exact joint Born distribution, not the product of
    marginals.
    """
    if mps.n_active == 0:
        return np.zeros((n_samples, 0), dtype=np.uint8)
    uniforms = np.random.default_rng(seed).random((n_samples, mps.n_active))
    return _kernels.sample_bits(mps._chain(), uniforms)


def decode_oneshot(msg: EncodedMessage, seed: int) -> dict:
    """One-shot reconstruction: sample every rest pixel in {0, 1}."""
    bits = sample_bitstrings(msg.phi, 1, seed)[0]
    return {site: float(b) for site, b in zip(msg.phi.active_sites, bits)}


def _eigenstate_pixel(basis: np.ndarray) -> float:
    # amplitudes below round-off are noise; collapsing them keeps basis-state
    # reconstructions exact instead of off by ~1e-17
    if abs(basis[0]) <= 1e-9:
        return 1.0
    if abs(basis[1]) <= 1e-9:
        return 0.0
    return state_to_pixel(basis)


def decode_postselect(msg: EncodedMessage, order: str = "entanglement") -> dict:
    """Deterministic gray-scale reconstruction by dominant eigenstates.

    Repeatedly visits the next site (highest current entanglement entropy by
    default, ties to the lowest index; ``order="sequential"`` visits left to
    right instead), reads off the pixel of the dominant eigenstate of its
    reduced density matrix, projects, and renormalizes.
    """
    if order not in ("entanglement", "sequential"):
        raise ArgumentError(f"unknown visit order {order!r}")
    work = msg.phi.copy()
    out = {}
    while work.n_active:
        sites = work.active_sites
        rhos = work.site_rdms()
        if order == "entanglement":
            pos = int(np.argmax(rdm_entropies(rhos)))
        else:
            pos = 0
        site = sites[pos]
        basis = dominant_eigenstate(rhos[pos])
        prob = max(float(basis @ rhos[pos] @ basis), 0.0)
        work._project_unchecked(site, basis, math.sqrt(prob))
        out[site] = _eigenstate_pixel(basis)
    return out


def quantum_average(mps: MPS, width: int | None = None,
                    height: int | None = None) -> Image:
    """The zero-pixels-sent reconstruction: a greedy maximal-probability image.

    Unlike the per-pixel arithmetic mean of a dataset, this completion takes
    correlations into account through the reduced density matrices.
    """
    plan = SamplingPlan([], "EO")
    msg = EncodedMessage(mps.copy(), {}, plan)
    rest = decode_postselect(msg)
    n = mps.n_active
    pixels = np.zeros(n)
    for site, value in rest.items():
        pixels[site] = value
    return Image(pixels, width or n, height or 1)


def classify(img: Image, models) -> int:
    """Index of the model assigning the image the largest probability.

    Evaluated in the log domain with each model normalized internally, so
    rescaling any model's tensors by a positive constant cannot change the
    result. Ties go to the lowest index.

    Raises:
        UnclassifiableError: every model gives the image zero probability.
    """
    if len(models) == 0:
        raise ArgumentError("need at least one model")
    states = pixel_state_array(img.pixels)[None]
    scores = []
    for model in models:
        if model.n_active != img.n_pixels:
            raise ArgumentError("model geometry does not match the image")
        logmag, _ = _kernels.logamp_batch(model._chain(), states)
        scores.append(2.0 * float(logmag[0]) - model.log_norm_sq())
    if not any(math.isfinite(s) for s in scores):
        raise UnclassifiableError("image has zero probability in every model")
    return int(np.argmax(scores))


# ----------------------------------------------------------------------
# F layer: reversible scrambling of the classical channel


def _quantize(x: float) -> int:
    return int(np.clip(round(255.0 * x), 0, 255))


def _rest_bytes(rest: Mapping[int, float]) -> bytes:
    return b"".join(
        struct.pack("<IB", site, _quantize(rest[site])) for site in sorted(rest)
    )


def sha_stream(salt: bytes, rest_bytes: bytes, site: int) -> int:
    """Default keystream byte: first byte of SHA-256(salt | rest | site)."""
    digest = hashlib.sha256(salt + rest_bytes + struct.pack("<I", site)).digest()
    return digest[0]


def null_stream(salt: bytes, rest_bytes: bytes, site: int) -> int:
    """All-zero keystream; test hook making the encryption the identity."""
    return 0


def f_encrypt(sent: Mapping[int, float], rest: Mapping[int, float], salt: bytes,
              plan: SamplingPlan | None = None,
              stream: Callable[[bytes, bytes, int], int] = sha_stream) -> CipherMessage:
    """Scramble the sent pixels with a digest stream keyed on the rest pixels.

    Pixels are quantized to 8 bits (v = round(255 x)) and shifted modulo 256
    by one keystream byte per site; the map is exactly invertible given the
    same rest pixels and salt. Changing any rest pixel changes the stream.

    There is no integrity check: decrypting with a mismatched rest silently
    yields wrong plaintext.
    """
    if len(rest) == 0:
        raise ArgumentError("rest pixel set must be nonempty")
    key = _rest_bytes(rest)
    y_sent = {
        site: (_quantize(value) + stream(salt, key, site)) % 256
        for site, value in sent.items()
    }
    return CipherMessage(y_sent=y_sent, plan=plan, digest_salt=bytes(salt))


def f_decrypt(cipher: CipherMessage, rest: Mapping[int, float],
              stream: Callable[[bytes, bytes, int], int] = sha_stream) -> dict:
    """Invert :func:`f_encrypt`; returns pixels on the 8-bit grid v/255."""
    if len(rest) == 0:
        raise ArgumentError("rest pixel set must be nonempty")
    key = _rest_bytes(rest)
    return {
        site: ((y - stream(cipher.digest_salt, key, site)) % 256) / 255.0
        for site, y in cipher.y_sent.items()
    }


def cipher_to_text(cipher: CipherMessage) -> str:
    """Serialize: a salt line, then one 'site=<idx> y=<0..255>' line each."""
    lines = [f"salt={cipher.digest_salt.hex()}"]
    for site in cipher.y_sent:
        lines.append(f"site={site} y={cipher.y_sent[site]}")
    return "\n".join(lines) + "\n"


def cipher_from_text(text: str) -> CipherMessage:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("salt="):
        raise FormatError("cipher text must start with a salt= line")
    salt = bytes.fromhex(lines[0].split("=", 1)[1])
    y_sent = {}
    for ln in lines[1:]:
        fields = dict(part.split("=", 1) for part in ln.split())
        if "site" not in fields or "y" not in fields:
            raise FormatError(f"malformed cipher line: {ln!r}")
        y_sent[int(fields["site"])] = int(fields["y"])
    return CipherMessage(y_sent=y_sent, digest_salt=salt)


# ----------------------------------------------------------------------
# message persistence

_PHI_FILE = "phi.tncs"
_PLAN_FILE = "plan.txt"
_SENT_FILE = "sent.txt"


def save_message(msg: EncodedMessage, directory, width: int, height: int) -> None:
    """Persist a message as (state binary, plan text, sent-pixel text)."""
    path = Path(directory)
    path.mkdir(parents=True, exist_ok=True)
    msg.phi.save(path / _PHI_FILE)
    (path / _PLAN_FILE).write_text(plan_to_text(msg.plan))
    lines = [f"width={width} height={height} n={width * height}"]
    for site, value in msg.sent.items():
        lines.append(f"site={site} x={value:.17g}")
    (path / _SENT_FILE).write_text("\n".join(lines) + "\n")


def load_message(directory) -> tuple[EncodedMessage, int, int]:
    """Load a persisted message; returns (message, width, height)."""
    path = Path(directory)
    plan = plan_from_text((path / _PLAN_FILE).read_text())
    lines = [ln.strip() for ln in (path / _SENT_FILE).read_text().splitlines()
             if ln.strip()]
    header = dict(part.split("=", 1) for part in lines[0].split())
    if "width" not in header or "height" not in header:
        raise FormatError("sent-pixel file lacks the geometry header")
    width, height = int(header["width"]), int(header["height"])
    n = width * height
    sent = {}
    for ln in lines[1:]:
        fields = dict(part.split("=", 1) for part in ln.split())
        sent[int(fields["site"])] = float(fields["x"])

    chain_mps = MPS.load(path / _PHI_FILE)
    rest_sites = [s for s in range(n) if s not in sent]
    if len(rest_sites) != chain_mps.n_active:
        raise FormatError(
            f"state has {chain_mps.n_active} sites but {len(rest_sites)} rest pixels"
        )
    tensors = [None] * n
    for site, tensor in zip(rest_sites, chain_mps._chain()):
        tensors[site] = tensor
    phi = MPS(tensors, validate=False)
    return EncodedMessage(phi, sent, plan), width, height
