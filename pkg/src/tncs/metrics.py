"""Quality metrics and their CSV emitters.

PSNR follows the '10 log10(N / sum of squared errors)' convention for unit
pixel range, generalized from the fixed 784-pixel case to any geometry.
Identical images get the +inf sentinel, serialized as the string ``inf``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ArgumentError
from .features import Image


@dataclass
class MetricsRecord:
    """Bundle of reconstruction and sparsity metrics for reporting."""

    psnr_db: float
    log2_qsparsity: float | None = None
    sbar_profile: list = field(default_factory=list)
    variance: np.ndarray | None = None
    shannon_nats: float | None = None

    def __post_init__(self):
        if self.shannon_nats is not None and self.shannon_nats < 0.0:
            raise ArgumentError("shannon_nats must be nonnegative")


@dataclass
class BenchRow:
    """One benchmark CSV row: reconstruction quality at a grid point."""

    nf: int
    strategy: str
    decoder: str
    chi: int
    psnr_mean: float
    psnr_std: float
    n_images: int
    exact: int
    unrecognized: int


def psnr(x: Image, y: Image) -> float:
    """Peak signal-to-noise ratio in dB between two same-geometry images.

    Returns math.inf when the images are identical.
    """
    if (x.width, x.height) != (y.width, y.height):
        raise ArgumentError(
            f"geometry mismatch: {x.width}x{x.height} vs {y.width}x{y.height}"
        )
    err = float(np.sum((x.pixels - y.pixels) ** 2))
    if err == 0.0:
        return math.inf
    return 10.0 * math.log10(x.n_pixels / err)


def estimate_nf(n_sites: int, log2_qsparsity: float, c: float) -> int:
    """Estimated number of sent pixels: ceil(c * (N + log2 sparsity)).

    Raises:
        ArgumentError: when the inputs imply a negative estimate.
    """
    value = c * (n_sites + log2_qsparsity)
    if value < 0.0:
        raise ArgumentError(
            f"negative estimate from N={n_sites}, log2 sparsity={log2_qsparsity}"
        )
    return int(math.ceil(value))


def fit_c(n_sites: int, log2_qsparsity: float, nf_needed: float) -> float:
    """Invert the estimate: the constant c implied by an observed N_f."""
    denom = n_sites + log2_qsparsity
    if denom <= 0.0:
        raise ArgumentError("sparsity budget N + log2(sparsity) must be positive")
    return nf_needed / denom


def format_db(value: float) -> str:
    """Serialize a PSNR value; the +inf sentinel becomes 'inf'."""
    if math.isinf(value):
        return "inf"
    return f"{value:.6g}"


def benchmark_csv(rows) -> str:
    """Render benchmark rows in the fixed CSV column order."""
    lines = ["nf,strategy,decoder,chi,psnr_mean,psnr_std,n_images,exact,unrecognized"]
    for r in rows:
        lines.append(
            f"{r.nf},{r.strategy},{r.decoder},{r.chi},"
            f"{format_db(r.psnr_mean)},{format_db(r.psnr_std)},"
            f"{r.n_images},{r.exact},{r.unrecognized}"
        )
    return "\n".join(lines) + "\n"


def qsparsity_csv(sbar_profile) -> str:
    """Mean-entropy decay profile as 'n_unmeasured,sbar' CSV."""
    lines = ["n_unmeasured,sbar"]
    n = len(sbar_profile)
    for k, sbar in enumerate(sbar_profile):
        lines.append(f"{n - k},{sbar:.12g}")
    return "\n".join(lines) + "\n"
