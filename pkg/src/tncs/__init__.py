"""Tensor-network compressed sensing.

Train a matrix-product-state Born machine on image data, encode an image by
projective measurements on a designed pixel subset, and reconstruct the
remaining pixels from the measured state, with quality and sparsity metrics
plus exact small-system oracles for verification.
"""

from ._kernels import BACKEND as KERNEL_BACKEND
from .codec import (
    CipherMessage,
    EncodedMessage,
    classify,
    decode_oneshot,
    decode_postselect,
    encode,
    f_decrypt,
    f_encrypt,
    quantum_average,
    sample_bitstrings,
)
from .data import Dataset, downscale, filter_class, load_model, read_idx, run_benchmark, save_model, write_idx
from .features import Image, QubitState, image_to_product, pixel_to_state, state_to_pixel
from .metrics import BenchRow, MetricsRecord, estimate_nf, psnr
from .mps import MPS
from .oracle import shannon_conditional, to_statevector
from .sampling import QSparsity, SamplingPlan, plan_eosp, plan_random, plan_variance, qsparsity
from .training import TrainConfig, TrainReport, gradient_site, nll, train

__version__ = "0.1.0"

__all__ = [
    "BenchRow",
    "CipherMessage",
    "Dataset",
    "EncodedMessage",
    "Image",
    "KERNEL_BACKEND",
    "MPS",
    "MetricsRecord",
    "QSparsity",
    "QubitState",
    "SamplingPlan",
    "TrainConfig",
    "TrainReport",
    "classify",
    "decode_oneshot",
    "decode_postselect",
    "downscale",
    "encode",
    "estimate_nf",
    "f_decrypt",
    "f_encrypt",
    "filter_class",
    "gradient_site",
    "image_to_product",
    "load_model",
    "nll",
    "pixel_to_state",
    "plan_eosp",
    "plan_random",
    "plan_variance",
    "psnr",
    "qsparsity",
    "quantum_average",
    "read_idx",
    "run_benchmark",
    "sample_bitstrings",
    "save_model",
    "shannon_conditional",
    "state_to_pixel",
    "to_statevector",
    "train",
    "write_idx",
]
