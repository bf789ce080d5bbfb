"""Matrix product state core: canonical forms, overlaps, local density
matrices, entanglement entropy and projective measurements.

Tensors are real rank-3 arrays with axes (physical, left bond, right bond)
and physical dimension 2. Measured sites are masked rather than removed so
original site indices stay stable for sampling plans and pixel maps; all
contractions run over the active chain only.

Mutating operations (``canonicalize``, the in-place projection helpers) need
exclusive access. Read operations (``amplitude``, ``rdm1``, ``see``) never
modify the state and are safe for concurrent callers; ``project_site``
returns a fresh value instead of aliasing its input. Tensor arrays are
treated as immutable: operations replace them, never write into them, so a
``copy()`` can share the underlying buffers.
"""

from __future__ import annotations

import math
import struct

import numpy as np

from . import _kernels
from .errors import (
    ArgumentError,
    DataIOError,
    FormatError,
    StructuralError,
    ZeroProbabilityError,
)

_MAGIC = b"TNCS"
_FORMAT_VERSION = 1
_EIG_CLIP = 1e-14       # eigenvalues below this contribute nothing to entropy
_DEGENERACY_TOL = 1e-12
_ZERO_PROB = 1e-14      # probability weight below which a projection is rejected


def rdm_entropy(rho: np.ndarray) -> float:
    """Von Neumann entropy (natural log) of a 2x2 density matrix.

    Eigenvalues are clipped at 1e-14 before x*ln(x); the matrix is positive
    semidefinite up to round-off, so smaller values are noise.
    """
    return float(rdm_entropies(np.asarray(rho, dtype=np.float64)[None])[0])


def rdm_entropies(rhos: np.ndarray) -> np.ndarray:
    """Vectorized entropy of a stack of 2x2 density matrices."""
    a = rhos[..., 0, 0]
    b = rhos[..., 1, 1]
    c = 0.5 * (rhos[..., 0, 1] + rhos[..., 1, 0])
    disc = np.hypot(0.5 * (a - b), c)
    mean = 0.5 * (a + b)
    lam = np.clip(np.stack([mean + disc, mean - disc], axis=-1), 0.0, 1.0)
    safe = np.where(lam > _EIG_CLIP, lam, 1.0)
    return np.maximum(-(safe * np.log(safe)).sum(axis=-1), 0.0)


def dominant_eigenstate(rho: np.ndarray) -> np.ndarray:
    """Leading eigenvector of a 2x2 density matrix with deterministic ties.

    Degenerate spectra return |0>; otherwise the sign is fixed so the largest
    component is positive. Both rules make downstream greedy decoders
    reproducible.
    """
    a = float(rho[0, 0])
    b = float(rho[1, 1])
    c = 0.5 * (float(rho[0, 1]) + float(rho[1, 0]))
    disc = math.hypot(0.5 * (a - b), c)
    if disc <= _DEGENERACY_TOL:
        return np.array([1.0, 0.0])
    lam = 0.5 * (a + b) + disc
    if abs(lam - a) >= abs(lam - b):
        v = np.array([c, lam - a])
    else:
        v = np.array([lam - b, c])
    v /= np.linalg.norm(v)
    if v[int(np.argmax(np.abs(v)))] < 0.0:
        v = -v
    return v


def _qr_pos(m: np.ndarray):
    """QR with nonnegative diagonal of R, making the decomposition unique."""
    q, r = np.linalg.qr(m)
    d = np.sign(np.diagonal(r)).copy()
    d[d == 0.0] = 1.0
    return q * d, r * d[:, None]


def _states_array(phi, n_expected: int | None = None) -> np.ndarray:
    if isinstance(phi, np.ndarray):
        arr = np.asarray(phi, dtype=np.float64)
    else:
        arr = np.array([np.asarray(s, dtype=np.float64) for s in phi], dtype=np.float64)
        if arr.size == 0:
            arr = arr.reshape(0, 2)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ArgumentError(f"expected a sequence of qubit states, got shape {arr.shape}")
    if n_expected is not None and arr.shape[0] != n_expected:
        raise ArgumentError(
            f"state sequence has length {arr.shape[0]}, expected {n_expected}"
        )
    return arr


class MPS:
    """Open-boundary matrix product state over qubits with site masking."""

    __slots__ = ("tensors", "active", "center", "chi_max")

    def __init__(self, tensors, active=None, center: int | None = None,
                 chi_max: int | None = None, validate: bool = True):
        self.tensors = [
            None if t is None else np.ascontiguousarray(t, dtype=np.float64)
            for t in tensors
        ]
        if active is None:
            self.active = np.array([t is not None for t in self.tensors], dtype=bool)
        else:
            self.active = np.asarray(active, dtype=bool).copy()
            if self.active.size != len(self.tensors):
                raise StructuralError("active mask length differs from tensor count")
        self.center = center
        self.chi_max = chi_max
        if validate:
            self.validate()

    # ------------------------------------------------------------------
    # constructors

    @classmethod
    def product(cls, states) -> "MPS":
        """Bond-1 MPS for a product of normalized qubit states."""
        arr = _states_array(states)
        tensors = []
        for row in arr:
            if abs(float(row @ row) - 1.0) > 1e-9:
                raise ArgumentError("product factors must be normalized")
            tensors.append(row.reshape(2, 1, 1))
        return cls(tensors, center=None)

    @classmethod
    def random(cls, n_sites: int, chi_max: int, seed: int = 0) -> "MPS":
        """Seeded random MPS: uniform [0, 1) entries, then canonicalized.

        Bond dimensions are capped both by ``chi_max`` and by the exact
        Schmidt rank bound 2^min(k, n-k) at each cut.
        """
        if n_sites < 1 or chi_max < 1:
            raise ArgumentError("need n_sites >= 1 and chi_max >= 1")
        rng = np.random.default_rng(seed)
        bonds = [1]
        for i in range(n_sites - 1):
            bonds.append(int(min(chi_max, 2 ** (i + 1), 2 ** (n_sites - 1 - i))))
        bonds.append(1)
        tensors = [rng.random((2, bonds[i], bonds[i + 1])) for i in range(n_sites)]
        mps = cls(tensors, chi_max=chi_max)
        return mps.canonicalize(0)

    @classmethod
    def ghz(cls, n_sites: int) -> "MPS":
        """The n-qubit GHZ state (|00...0> + |11...1>) / sqrt(2)."""
        if n_sites < 1:
            raise ArgumentError("need n_sites >= 1")
        if n_sites == 1:
            return cls([np.full((2, 1, 1), 1.0 / math.sqrt(2.0))], center=0)
        first = np.zeros((2, 1, 2))
        first[0, 0, 0] = 1.0
        first[1, 0, 1] = 1.0
        mid = np.zeros((2, 2, 2))
        mid[0, 0, 0] = 1.0
        mid[1, 1, 1] = 1.0
        last = np.zeros((2, 2, 1))
        last[0, 0, 0] = 1.0 / math.sqrt(2.0)
        last[1, 1, 0] = 1.0 / math.sqrt(2.0)
        tensors = [first] + [mid] * (n_sites - 2) + [last]
        return cls(tensors, center=n_sites - 1)

    @classmethod
    def from_statevector(cls, vec) -> "MPS":
        """Exact MPS of a full state vector (up to 20 qubits).

        The vector is indexed lexicographically with site 0 as the most
        significant bit. The result is normalized with center on the last
        site.
        """
        v = np.asarray(vec, dtype=np.float64).ravel()
        n = int(round(math.log2(v.size))) if v.size else 0
        if v.size == 0 or 2 ** n != v.size:
            raise ArgumentError(f"state vector length {v.size} is not a power of 2")
        if n > 20:
            raise ArgumentError("refusing state vectors beyond 20 qubits")
        tensors = []
        work = v.reshape(1, -1)
        bond = 1
        for _ in range(n - 1):
            m = work.reshape(bond * 2, -1)
            u, s, vt = np.linalg.svd(m, full_matrices=False)
            keep = s > (s[0] * 1e-14 if s[0] > 0 else -1.0)
            keep[0] = True
            u, s, vt = u[:, keep], s[keep], vt[keep]
            tensors.append(u.reshape(bond, 2, -1).transpose(1, 0, 2))
            work = s[:, None] * vt
            bond = s.size
        last = work.reshape(bond, 2, 1).transpose(1, 0, 2)
        nrm = float(np.linalg.norm(last))
        if nrm == 0.0:
            raise ArgumentError("cannot build an MPS from the zero vector")
        tensors.append(last / nrm)
        return cls(tensors, center=n - 1)

    # ------------------------------------------------------------------
    # structure

    @property
    def n_sites(self) -> int:
        return len(self.tensors)

    @property
    def n_active(self) -> int:
        return int(self.active.sum())

    @property
    def active_sites(self) -> list:
        return [int(i) for i in np.flatnonzero(self.active)]

    def _chain(self) -> list:
        return [self.tensors[i] for i in np.flatnonzero(self.active)]

    def max_bond(self) -> int:
        dims = [1]
        for t in self._chain():
            dims.append(max(t.shape[1], t.shape[2]))
        return max(dims)

    def copy(self) -> "MPS":
        out = MPS.__new__(MPS)
        out.tensors = list(self.tensors)
        out.active = self.active.copy()
        out.center = self.center
        out.chi_max = self.chi_max
        return out

    def validate(self) -> None:
        """Check structural invariants, raising StructuralError on violation."""
        prev_right = 1
        first = True
        for i in np.flatnonzero(self.active):
            t = self.tensors[i]
            if t is None:
                raise StructuralError(f"active site {i} has no tensor")
            if t.ndim != 3 or t.shape[0] != 2:
                raise StructuralError(f"site {i} tensor has shape {t.shape}")
            want = 1 if first else prev_right
            if t.shape[1] != want:
                raise StructuralError(
                    f"site {i}: left bond {t.shape[1]} does not match {want}"
                )
            if self.chi_max is not None and max(t.shape[1], t.shape[2]) > self.chi_max:
                raise StructuralError(
                    f"site {i}: bond dimension exceeds chi_max={self.chi_max}"
                )
            prev_right = t.shape[2]
            first = False
        if not first and prev_right != 1:
            raise StructuralError(f"last active site has right bond {prev_right}")
        for i, t in enumerate(self.tensors):
            if not self.active[i] and t is not None:
                raise StructuralError(f"inactive site {i} still holds a tensor")
        if self.center is not None and not (
            0 <= self.center < self.n_sites and self.active[self.center]
        ):
            raise StructuralError(f"center {self.center} is not an active site")

    def _pos(self, n: int) -> int:
        if not (0 <= n < self.n_sites) or not self.active[n]:
            raise ArgumentError(f"site {n} is not an active site")
        return int(self.active[:n].sum())

    # ------------------------------------------------------------------
    # gauge and norm

    def canonicalize(self, k: int) -> "MPS":
        """Bring the state to mixed-canonical form with center at site ``k``.

        Left of the center every tensor becomes a left isometry, right of it
        a right isometry, and the center is rescaled to unit norm, so the
        state is unchanged up to global normalization. Mutates in place and
        returns self.
        """
        self.validate()
        pos = self._pos(k)
        idx = self.active_sites
        chain = self._chain()
        for j in range(pos):
            a = chain[j]
            d, dl, dr = a.shape
            q, r = _qr_pos(a.reshape(d * dl, dr))
            chain[j] = q.reshape(d, dl, q.shape[1])
            r /= np.linalg.norm(r)
            chain[j + 1] = np.einsum("ab,sbc->sac", r, chain[j + 1])
        for j in range(len(chain) - 1, pos, -1):
            a = chain[j]
            d, dl, dr = a.shape
            m = a.transpose(1, 0, 2).reshape(dl, d * dr)
            q, r = _qr_pos(m.T)
            chain[j] = q.T.reshape(q.shape[1], d, dr).transpose(1, 0, 2)
            left = r.T / np.linalg.norm(r)
            chain[j - 1] = np.einsum("sab,bc->sac", chain[j - 1], left)
        chain[pos] = chain[pos] / np.linalg.norm(chain[pos])
        for j, i in enumerate(idx):
            self.tensors[i] = np.ascontiguousarray(chain[j])
        self.center = k
        return self

    def log_norm_sq(self) -> float:
        """ln <psi|psi>, exactly 0 for a canonical state up to round-off."""
        if self.n_active == 0:
            return 0.0
        return float(_kernels.log_norm_sq(self._chain()))

    def norm(self) -> float:
        return float(math.exp(0.5 * self.log_norm_sq()))

    def canonical_defect(self) -> float:
        """Largest deviation of the isometry/normalization conditions.

        Requires a known center; useful in tests and sanity checks.
        """
        if self.center is None:
            raise ArgumentError("state has no orthogonality center")
        pos = self._pos(self.center)
        chain = self._chain()
        worst = abs(float(np.linalg.norm(chain[pos])) - 1.0)
        for j, a in enumerate(chain):
            if j < pos:
                g = np.einsum("sab,sac->bc", a, a)
            elif j > pos:
                g = np.einsum("sab,scb->ac", a, a)
            else:
                continue
            worst = max(worst, float(np.abs(g - np.eye(g.shape[0])).max()))
        return worst

    # ------------------------------------------------------------------
    # observables

    def amplitude(self, phi) -> float:
        """Overlap <phi|psi> with a product state over the active sites.

        Computed by a left-to-right zipper contraction in O(n * chi^2).
        """
        states = _states_array(phi, self.n_active)
        if self.n_active == 0:
            return 1.0
        logmag, sign = _kernels.logamp_batch(self._chain(), states[None])
        if not np.isfinite(logmag[0]):
            return 0.0
        return float(sign[0] * math.exp(logmag[0]))

    def rdm1(self, n: int) -> np.ndarray:
        """Single-site reduced density matrix at active site ``n``.

        Evaluated through left/right transfer environments, which equals the
        mixed-canonical local contraction in any gauge and leaves the state
        untouched. Assumes a normalized state; the result is symmetrized and
        trace-normalized.
        """
        pos = self._pos(n)
        chain = self._chain()
        if self.center == n:
            a = chain[pos]
            rho = np.einsum("sab,tab->st", a, a)
        else:
            rho = self._rdm_general(chain, pos)
        rho = 0.5 * (rho + rho.T)
        return rho / np.trace(rho)

    @staticmethod
    def _rdm_general(chain: list, pos: int) -> np.ndarray:
        left = np.ones((1, 1))
        for a in chain[:pos]:
            left = a[0].T @ left @ a[0] + a[1].T @ left @ a[1]
            left /= np.trace(left)
        right = np.ones((1, 1))
        for a in reversed(chain[pos + 1:]):
            right = a[0] @ right @ a[0].T + a[1] @ right @ a[1].T
            right /= np.trace(right)
        a = chain[pos]
        x0 = a[0].T @ left
        x1 = a[1].T @ left
        return np.array([
            [np.sum((x0 @ a[0]) * right), np.sum((x0 @ a[1]) * right)],
            [np.sum((x1 @ a[0]) * right), np.sum((x1 @ a[1]) * right)],
        ])

    def see(self, n: int) -> float:
        """Single-site entanglement entropy S_n = -Tr rho_n ln rho_n."""
        return rdm_entropy(self.rdm1(n))

    def site_rdms(self) -> np.ndarray:
        """Reduced density matrices of every active site, in site order."""
        if self.n_active == 0:
            return np.zeros((0, 2, 2))
        return _kernels.site_rdms(self._chain())

    def site_entropies(self) -> np.ndarray:
        """Entanglement entropy of every active site, in site order."""
        return rdm_entropies(self.site_rdms())

    # ------------------------------------------------------------------
    # measurement

    def project_site(self, n: int, state) -> tuple["MPS", float]:
        """Project active site ``n`` onto a normalized qubit state.

        Returns a new MPS on the remaining active sites, renormalized, plus
        the normalization constant C; C^2 is the probability weight of the
        outcome when the input state is normalized.

        Raises:
            ZeroProbabilityError: when the outcome has probability weight
                below 1e-14 (a numerically impossible measurement result).
        """
        v = np.asarray(state, dtype=np.float64).ravel()
        if v.shape != (2,):
            raise ArgumentError("projection state must have two components")
        if abs(float(v @ v) - 1.0) > 1e-9:
            raise ArgumentError("projection state must be normalized")
        rho = self.rdm1(n)
        prob = max(float(v @ rho @ v), 0.0)
        if prob < _ZERO_PROB:
            raise ZeroProbabilityError(
                f"projection at site {n} has zero probability", site=n
            )
        c = math.sqrt(prob)
        out = self.copy()
        out._project_unchecked(n, v, c)
        return out, c

    def _project_unchecked(self, n: int, v: np.ndarray, c: float) -> None:
        """In-place projection; caller supplies the normalization constant."""
        idx = self.active_sites
        pos = idx.index(n)
        a = self.tensors[n]
        m = (v[0] * a[0] + v[1] * a[1]) / c
        self.tensors[n] = None
        self.active[n] = False
        if pos + 1 < len(idx):
            nxt = idx[pos + 1]
            self.tensors[nxt] = np.ascontiguousarray(
                np.einsum("ab,sbc->sac", m, self.tensors[nxt])
            )
        elif pos - 1 >= 0:
            prv = idx[pos - 1]
            self.tensors[prv] = np.ascontiguousarray(
                np.einsum("sab,bc->sac", self.tensors[prv], m)
            )
        self.center = None

    # ------------------------------------------------------------------
    # persistence

    def save(self, path) -> None:
        """Write the active chain in the binary container format.

        Layout: magic "TNCS", then little-endian u32 format version, site
        count and physical dimension, then per-site (left, right) bond dims,
        then per-site float64 payloads in (physical, left, right) axis order,
        row-major. Masked sites are not representable; only the active chain
        is written.
        """
        chain = self._chain()
        with open(path, "wb") as f:
            f.write(_MAGIC)
            f.write(struct.pack("<III", _FORMAT_VERSION, len(chain), 2))
            for a in chain:
                f.write(struct.pack("<II", a.shape[1], a.shape[2]))
            for a in chain:
                f.write(np.ascontiguousarray(a, dtype="<f8").tobytes())

    @classmethod
    def load(cls, path) -> "MPS":
        """Read a state written by :meth:`save`.

        Raises:
            FormatError: wrong magic, version, or inconsistent bond table.
            DataIOError: truncated payload.
        """
        with open(path, "rb") as f:
            head = f.read(16)
            if len(head) < 16:
                raise DataIOError(f"{path}: truncated header")
            if head[:4] != _MAGIC:
                raise FormatError(f"{path}: bad magic {head[:4]!r}")
            version, n, d = struct.unpack("<III", head[4:16])
            if version != _FORMAT_VERSION:
                raise FormatError(f"{path}: unsupported format version {version}")
            if d != 2:
                raise FormatError(f"{path}: unsupported physical dimension {d}")
            raw = f.read(8 * n)
            if len(raw) < 8 * n:
                raise DataIOError(f"{path}: truncated bond table")
            dims = [struct.unpack("<II", raw[8 * i:8 * i + 8]) for i in range(n)]
            prev = 1
            for i, (dl, dr) in enumerate(dims):
                if dl != prev or dl < 1 or dr < 1:
                    raise FormatError(f"{path}: inconsistent bond table at site {i}")
                prev = dr
            if n and prev != 1:
                raise FormatError(f"{path}: last right bond is {prev}, expected 1")
            tensors = []
            for dl, dr in dims:
                count = 2 * dl * dr
                payload = f.read(8 * count)
                if len(payload) < 8 * count:
                    raise DataIOError(f"{path}: truncated tensor payload")
                tensors.append(
                    np.frombuffer(payload, dtype="<f8").reshape(2, dl, dr).copy()
                )
        return cls(tensors, center=None, validate=False)
