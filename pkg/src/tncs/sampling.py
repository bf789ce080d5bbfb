"""Construction of ordered pixel subsets for encoding, plus the q-sparsity
functional built on the entanglement-ordered trajectory.

Three strategies are supported: RO (seeded random order), VO (descending
per-pixel variance over a dataset) and EO (entanglement ordering: greedily
measure the site with the largest single-site entanglement entropy in the
dominant eigenstate of its reduced density matrix). Ties always resolve to
the lowest site index, and degenerate density matrices project onto |0>, so
plans are reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ArgumentError, FormatError
from .mps import MPS, dominant_eigenstate, rdm_entropies

_LN2 = math.log(2.0)

STRATEGIES = ("RO", "VO", "EO")


@dataclass
class SamplingPlan:
    """Ordered site subset with its strategy tag.

    For EO plans, ``see_trajectory[k]`` records the mean single-site
    entanglement entropy over the sites still unmeasured just before the
    k-th projection, and ``basis_states[k]`` the dominant eigenstate
    projected at that step. Both stay empty for RO/VO plans.
    """

    order: list
    strategy: str
    see_trajectory: list = field(default_factory=list)
    basis_states: list = field(default_factory=list)

    def __post_init__(self):
        self.order = [int(i) for i in self.order]
        if self.strategy not in STRATEGIES:
            raise ArgumentError(f"unknown strategy {self.strategy!r}")
        if len(set(self.order)) != len(self.order):
            raise ArgumentError("plan order contains duplicate sites")

    @property
    def n_f(self) -> int:
        return len(self.order)

    def prefix(self, n_f: int) -> "SamplingPlan":
        """The plan truncated to its first ``n_f`` steps."""
        if n_f > len(self.order):
            raise ArgumentError(f"plan has only {len(self.order)} steps")
        return SamplingPlan(
            self.order[:n_f],
            self.strategy,
            list(self.see_trajectory[:n_f]),
            list(self.basis_states[:n_f]),
        )


def plan_to_text(plan: SamplingPlan) -> str:
    """Line format: a strategy header, then one 'site=... sbar=...' per step."""
    lines = [f"strategy={plan.strategy}"]
    for k, site in enumerate(plan.order):
        sbar = plan.see_trajectory[k] if k < len(plan.see_trajectory) else math.nan
        lines.append(f"site={site} sbar={sbar:.12g}")
    return "\n".join(lines) + "\n"


def plan_from_text(text: str) -> SamplingPlan:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("strategy="):
        raise FormatError("plan text must start with a strategy= line")
    strategy = lines[0].split("=", 1)[1]
    order, trajectory = [], []
    for ln in lines[1:]:
        fields = dict(part.split("=", 1) for part in ln.split())
        if "site" not in fields:
            raise FormatError(f"malformed plan line: {ln!r}")
        order.append(int(fields["site"]))
        trajectory.append(float(fields.get("sbar", "nan")))
    if all(math.isnan(v) for v in trajectory):
        trajectory = []
    return SamplingPlan(order, strategy, trajectory)


@dataclass
class QSparsity:
    """log2 of the q-sparsity together with the full mean-entropy profile."""

    log2_value: float
    sbar_profile: list


def plan_random(n_sites: int, n_f: int, seed: int) -> SamplingPlan:
    """Uniformly random distinct sites in shuffled order, seeded.

    Plans for growing ``n_f`` under the same seed are nested prefixes of one
    permutation.
    """
    if not 0 <= n_f <= n_sites:
        raise ArgumentError(f"n_f={n_f} outside [0, {n_sites}]")
    rng = np.random.default_rng(seed)
    order = rng.permutation(n_sites)[:n_f]
    return SamplingPlan([int(i) for i in order], "RO")


def pixel_variance(dataset) -> np.ndarray:
    """Per-pixel variance over the dataset (population convention, /K)."""
    if len(dataset) == 0:
        raise ArgumentError("variance of an empty dataset")
    stack = np.stack([img.pixels for img in dataset])
    return stack.var(axis=0)


def plan_variance(dataset, n_f: int) -> SamplingPlan:
    """Sites sorted by descending pixel variance, ties to the lower index."""
    variance = pixel_variance(dataset)
    if not 0 <= n_f <= variance.size:
        raise ArgumentError(f"n_f={n_f} outside [0, {variance.size}]")
    order = np.argsort(-variance, kind="stable")[:n_f]
    return SamplingPlan([int(i) for i in order], "VO")


def plan_eosp(mps: MPS, n_f: int) -> SamplingPlan:
    """Entanglement-ordered sampling over ``n_f`` greedy steps.

    Each step computes the entanglement entropy of every unmeasured site,
    records their mean, measures the maximal-entropy site (lowest index on
    ties) in the dominant eigenstate of its reduced density matrix, and
    renormalizes. The input state is never modified.
    """
    if not 0 <= n_f <= mps.n_active:
        raise ArgumentError(f"n_f={n_f} outside [0, {mps.n_active}]")
    work = mps.copy()
    if n_f and work.center is None:
        work.canonicalize(work.active_sites[0])
    order, trajectory, bases = [], [], []
    for _ in range(n_f):
        sites = work.active_sites
        rhos = work.site_rdms()
        sees = rdm_entropies(rhos)
        trajectory.append(float(sees.mean()))
        pos = int(np.argmax(sees))
        site = sites[pos]
        basis = dominant_eigenstate(rhos[pos])
        prob = max(float(basis @ rhos[pos] @ basis), 0.0)
        work._project_unchecked(site, basis, math.sqrt(prob))
        order.append(site)
        bases.append(basis)
    return SamplingPlan(order, "EO", trajectory, bases)


def qsparsity(mps: MPS) -> QSparsity:
    """log2 q-sparsity: sum over the full EO trajectory of (sbar/ln2 - 1).

    Runs the entanglement-ordered protocol to exhaustion, so the profile has
    one entry per site, from all sites unmeasured down to a single qubit
    (whose entropy is identically zero).
    """
    plan = plan_eosp(mps, mps.n_active)
    log2_value = sum(s / _LN2 - 1.0 for s in plan.see_trajectory)
    return QSparsity(float(log2_value), list(plan.see_trajectory))
