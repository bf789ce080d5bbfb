"""Metrics and oracle tests: PSNR, the sent-pixel estimator, dense-vector
expansion and the enumerated conditional Shannon entropy."""

import math

import numpy as np
import pytest

from conftest import random_signed_mps
from tncs.errors import ArgumentError, ZeroProbabilityError
from tncs.features import Image, pixel_state_array, state_to_pixel
from tncs.metrics import BenchRow, benchmark_csv, estimate_nf, format_db, psnr, qsparsity_csv
from tncs.mps import MPS, dominant_eigenstate
from tncs.oracle import shannon_conditional, to_statevector

GOLDEN_ENTROPY = 1.2554823251787535
S34 = 0.5623351446188083


# ----------------------------------------------------------------------
# psnr


def test_psnr_identical_images_is_inf():
    img = Image(np.linspace(0, 1, 16), 4, 4)
    assert psnr(img, img) == math.inf


def test_psnr_single_pixel_difference():
    x = Image(np.zeros(784), 28, 28)
    y_pixels = np.zeros(784)
    y_pixels[100] = 0.1
    y = Image(y_pixels, 28, 28)
    assert psnr(x, y) == pytest.approx(10 * math.log10(784 / 0.01), abs=1e-9)
    assert psnr(x, y) == pytest.approx(48.944, abs=1e-3)


def test_psnr_maximal_error_is_zero_db():
    x = Image(np.zeros(784), 28, 28)
    y = Image(np.ones(784), 28, 28)
    assert psnr(x, y) == pytest.approx(0.0, abs=1e-12)


def test_psnr_symmetry():
    rng = np.random.default_rng(0)
    x = Image(rng.random(36), 6, 6)
    y = Image(rng.random(36), 6, 6)
    assert psnr(x, y) == psnr(y, x)


def test_psnr_geometry_mismatch():
    with pytest.raises(ArgumentError):
        psnr(Image(np.zeros(6), 3, 2), Image(np.zeros(6), 2, 3))


# ----------------------------------------------------------------------
# sent-pixel estimator


def test_estimate_nf_published_operating_points():
    assert estimate_nf(784, -768.6, 6.0) == 93
    assert estimate_nf(784, -770.0, 6.0) == 84


def test_estimate_nf_ghz():
    for n in (4, 10, 100):
        assert estimate_nf(n, -(n - 1), 1.0) == 1


def test_estimate_nf_negative_rejected():
    with pytest.raises(ArgumentError):
        estimate_nf(10, -20.0, 6.0)


# ----------------------------------------------------------------------
# dense oracle


def test_to_statevector_golden(paired4, paired4_vec):
    vec = to_statevector(paired4)
    assert vec == pytest.approx(paired4_vec, abs=1e-12)
    assert vec[0b0101] == pytest.approx(math.sqrt(2) / 4)
    assert vec[0b0110] == pytest.approx(math.sqrt(6) / 4)
    assert vec[0b1001] == pytest.approx(math.sqrt(2) / 4)
    assert vec[0b1010] == pytest.approx(math.sqrt(6) / 4)


def test_to_statevector_product_basis():
    mps = MPS.product(np.array([[1.0, 0.0], [0.0, 1.0]]))
    assert to_statevector(mps) == pytest.approx([0, 1.0, 0, 0])


def test_to_statevector_normalized():
    mps = random_signed_mps(8, 3, seed=14)
    vec = to_statevector(mps)
    assert float(vec @ vec) == pytest.approx(1.0, abs=1e-10)


def test_to_statevector_refuses_large():
    mps = MPS.product(np.tile([1.0, 0.0], (21, 1)))
    with pytest.raises(ArgumentError):
        to_statevector(mps)


def test_amplitude_oracle_consistency():
    for seed in range(3):
        mps = random_signed_mps(5, 4, seed=seed + 70)
        vec = to_statevector(mps)
        for code in range(32):
            bits = [(code >> (4 - i)) & 1 for i in range(5)]
            states = np.array([[1.0, 0.0] if b == 0 else [0.0, 1.0] for b in bits])
            assert mps.amplitude(states) == pytest.approx(float(vec[code]), abs=1e-10)


# ----------------------------------------------------------------------
# conditional Shannon entropy


def test_shannon_conditional_golden(paired4):
    assert shannon_conditional(paired4, {0: 0.0}) == pytest.approx(S34, abs=1e-9)
    assert shannon_conditional(paired4, {0: 0.0, 2: 0.0}) == pytest.approx(0.0, abs=1e-9)


def test_shannon_conditional_empty_sent_is_full_entropy(paired4):
    assert shannon_conditional(paired4, {}) == pytest.approx(GOLDEN_ENTROPY, abs=1e-9)


def test_shannon_conditional_product_state():
    # binary product states have a delta readout distribution; gray pixels
    # would retain per-qubit readout entropy under the binary enumeration
    mps = MPS.product(pixel_state_array(np.array([0.0, 1.0, 1.0])))
    assert shannon_conditional(mps, {}) == pytest.approx(0.0, abs=1e-9)
    assert shannon_conditional(mps, {1: 1.0}) == pytest.approx(0.0, abs=1e-9)


def test_shannon_conditional_zero_probability(paired4):
    phi, _ = paired4.project_site(0, (1.0, 0.0))
    with pytest.raises(ZeroProbabilityError):
        shannon_conditional(phi, {1: 0.0})


def test_shannon_conditional_monotone_under_dominant_outcomes():
    """Fixing a site to its dominant outcome never raises the entropy on the
    nonnegative-model ensemble used by training."""
    for seed in range(6):
        mps = MPS.random(6, 3, seed=seed + 90)
        base = shannon_conditional(mps, {})
        sent = {}
        work = mps.copy()
        for _ in range(3):
            site = work.active_sites[int(np.argmax(work.site_entropies()))]
            basis = dominant_eigenstate(work.rdm1(site))
            sent[site] = state_to_pixel(basis)
            work, _ = work.project_site(site, basis)
            current = shannon_conditional(mps, sent)
            assert current <= base + 1e-9
            base = current


# ----------------------------------------------------------------------
# CSV emitters


def test_benchmark_csv_format():
    rows = [
        BenchRow(5, "EO", "postselect", 16, 21.5, 2.25, 50, 1, 0),
        BenchRow(0, "RO", "oneshot", 16, math.inf, 0.0, 50, 50, 0),
    ]
    text = benchmark_csv(rows)
    lines = text.strip().split("\n")
    assert lines[0] == "nf,strategy,decoder,chi,psnr_mean,psnr_std,n_images,exact,unrecognized"
    assert lines[1] == "5,EO,postselect,16,21.5,2.25,50,1,0"
    assert lines[2].startswith("0,RO,oneshot,16,inf,")


def test_format_db_inf_sentinel():
    assert format_db(math.inf) == "inf"
    assert format_db(12.345678) == "12.3457"


def test_qsparsity_csv():
    text = qsparsity_csv([0.69, 0.31, 0.0])
    assert text.splitlines() == [
        "n_unmeasured,sbar", "3,0.69", "2,0.31", "1,0",
    ]
