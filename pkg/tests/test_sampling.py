"""Sampling plan tests: random/variance/entanglement orderings and the
q-sparsity functional."""

import math

import numpy as np
import pytest

from conftest import LN2, S34, paired4_multiset, random_signed_mps
from tncs.errors import ArgumentError
from tncs.features import Image, pixel_state_array
from tncs.mps import MPS
from tncs.oracle import to_statevector
from tncs.sampling import (
    SamplingPlan,
    plan_eosp,
    plan_from_text,
    plan_random,
    plan_to_text,
    plan_variance,
    pixel_variance,
    qsparsity,
)

SBAR4 = (2 * LN2 + 2 * S34) / 4.0
SBAR3 = 2 * S34 / 3.0


# ----------------------------------------------------------------------
# random ordering


def test_plan_random_full_permutation():
    plan = plan_random(4, 4, seed=3)
    assert sorted(plan.order) == [0, 1, 2, 3]
    assert plan.strategy == "RO"


def test_plan_random_deterministic():
    a = plan_random(784, 78, seed=7)
    b = plan_random(784, 78, seed=7)
    assert a.order == b.order


def test_plan_random_seed_sensitivity():
    differing = sum(
        plan_random(784, 78, seed=s).order != plan_random(784, 78, seed=s + 1000).order
        for s in range(100)
    )
    assert differing == 100


def test_plan_random_prefix_stability():
    full = plan_random(50, 30, seed=5)
    assert plan_random(50, 12, seed=5).order == full.order[:12]


def test_plan_random_rejects_oversized():
    with pytest.raises(ArgumentError):
        plan_random(4, 5, seed=0)


# ----------------------------------------------------------------------
# variance ordering


def test_plan_variance_golden_multiset():
    imgs = paired4_multiset()
    v = pixel_variance(imgs)
    assert v == pytest.approx([0.25, 0.25, 0.1875, 0.1875])
    plan = plan_variance(imgs, 2)
    assert plan.order == [0, 1]


def test_plan_variance_constant_dataset_tie_break():
    imgs = [Image([0.5, 0.5, 0.5], 3, 1)] * 4
    assert plan_variance(imgs, 3).order == [0, 1, 2]


def test_plan_variance_single_differing_pixel():
    a = np.zeros(8)
    b = np.zeros(8)
    b[5] = 1.0
    plan = plan_variance([Image(a, 8, 1), Image(b, 8, 1)], 3)
    assert plan.order[0] == 5


def test_plan_variance_empty_dataset():
    with pytest.raises(ArgumentError):
        plan_variance([], 2)


# ----------------------------------------------------------------------
# entanglement ordering


def test_plan_eosp_golden(paired4):
    plan = plan_eosp(paired4, 2)
    assert plan.order == [0, 2]
    assert plan.see_trajectory == pytest.approx([SBAR4, SBAR3], abs=1e-9)
    assert plan.strategy == "EO"
    for basis in plan.basis_states:
        assert np.linalg.norm(basis) == pytest.approx(1.0, abs=1e-12)
    # degenerate first density matrix projects onto |0>
    assert plan.basis_states[0] == pytest.approx([1.0, 0.0])


def test_plan_eosp_ghz_trajectory():
    plan = plan_eosp(MPS.ghz(4), 2)
    assert plan.see_trajectory == pytest.approx([LN2, 0.0], abs=1e-9)
    assert plan.order[0] == 0


def test_plan_eosp_product_state_all_zero():
    mps = MPS.product(pixel_state_array(np.array([0.1, 0.6, 0.8, 0.3])))
    plan = plan_eosp(mps, 4)
    assert plan.see_trajectory == pytest.approx([0.0] * 4, abs=1e-12)


def test_plan_eosp_leaves_input_untouched(paired4):
    before = to_statevector(paired4)
    plan_eosp(paired4, 4)
    assert paired4.n_active == 4
    assert to_statevector(paired4) == pytest.approx(before, abs=1e-14)


def test_plan_eosp_first_pick_maximizes_see():
    for seed in range(6):
        mps = random_signed_mps(8, 3, seed=seed + 30)
        plan = plan_eosp(mps, 1)
        sees = [mps.see(n) for n in range(8)]
        assert plan.order[0] == int(np.argmax(sees))


def test_plan_eosp_rejects_oversized(paired4):
    with pytest.raises(ArgumentError):
        plan_eosp(paired4, 5)


def test_plan_validation():
    with pytest.raises(ArgumentError):
        SamplingPlan([1, 1], "EO")
    with pytest.raises(ArgumentError):
        SamplingPlan([0], "XX")


def test_plan_text_roundtrip(paired4):
    plan = plan_eosp(paired4, 3)
    back = plan_from_text(plan_to_text(plan))
    assert back.order == plan.order
    assert back.strategy == plan.strategy
    assert back.see_trajectory == pytest.approx(plan.see_trajectory, abs=1e-10)
    ro = plan_random(10, 4, seed=0)
    back = plan_from_text(plan_to_text(ro))
    assert back.order == ro.order
    assert back.see_trajectory == []


# ----------------------------------------------------------------------
# q-sparsity


@pytest.mark.parametrize("n", range(2, 11))
def test_qsparsity_ghz(n):
    assert qsparsity(MPS.ghz(n)).log2_value == pytest.approx(-(n - 1), abs=1e-9)


def test_qsparsity_product_state():
    for n in (3, 6, 9):
        mps = MPS.product(pixel_state_array(np.linspace(0.1, 0.9, n)))
        assert qsparsity(mps).log2_value == pytest.approx(-n, abs=1e-9)


def test_qsparsity_golden(paired4):
    result = qsparsity(paired4)
    assert result.log2_value == pytest.approx(-2.554, abs=1e-3)
    assert len(result.sbar_profile) == 4
    assert result.sbar_profile == pytest.approx([SBAR4, SBAR3, 0.0, 0.0], abs=1e-9)


def test_qsparsity_flat_profile_gives_zero():
    # a trajectory pinned at ln 2 contributes nothing per site
    profile = [LN2] * 12
    assert sum(s / LN2 - 1.0 for s in profile) == pytest.approx(0.0, abs=1e-12)


def test_qsparsity_trajectory_bounds():
    for seed in range(4):
        mps = random_signed_mps(7, 3, seed=seed + 50)
        result = qsparsity(mps)
        assert result.log2_value <= 1e-9
        for sbar in result.sbar_profile:
            assert -1e-12 <= sbar <= LN2 + 1e-9


def test_greedy_two_pixel_plan_minimizes_conditional_entropy(paired4):
    """The entanglement-ordered 2-subset beats every other 2-subset when each
    site is measured in its current dominant eigenstate."""
    from itertools import permutations

    from tncs.features import state_to_pixel
    from tncs.mps import dominant_eigenstate
    from tncs.oracle import shannon_conditional

    def greedy_outcome_entropy(sites):
        work = paired4.copy()
        sent = {}
        for s in sites:
            basis = dominant_eigenstate(work.rdm1(s))
            sent[s] = state_to_pixel(basis)
            work, _ = work.project_site(s, basis)
        return shannon_conditional(paired4, sent)

    eosp_sites = plan_eosp(paired4, 2).order
    best = greedy_outcome_entropy(eosp_sites)
    for pair in permutations(range(4), 2):
        assert best <= greedy_outcome_entropy(list(pair)) + 1e-9
