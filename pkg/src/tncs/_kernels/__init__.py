"""Hot contraction kernels with a compiled core and a pure-python fallback.

The compiled backend (Cython) is picked automatically when its extension
module imported cleanly; set ``TNCS_PURE_PYTHON=1`` to force the numpy
fallback. Both backends expose the same four functions over a list of
C-contiguous float64 tensors of shape (2, left, right):

- ``site_rdms(tensors)``: all single-site reduced density matrices.
- ``log_norm_sq(tensors)``: ln <psi|psi> via a scaled transfer contraction.
- ``logamp_batch(tensors, states)``: log-magnitudes and signs of the
  overlaps with a batch of product states.
- ``sample_bits(tensors, uniforms)``: autoregressive basis sampling driven
  by pre-drawn uniform variates, so results are backend-independent.
"""

import os

from . import _pykern

if os.environ.get("TNCS_PURE_PYTHON"):
    _impl = _pykern
else:
    try:
        from . import _ckern as _impl
    except ImportError:
        _impl = _pykern

BACKEND = "compiled" if _impl is not _pykern else "python"

site_rdms = _impl.site_rdms
log_norm_sq = _impl.log_norm_sq
logamp_batch = _impl.logamp_batch
sample_bits = _impl.sample_bits


def available_backends() -> dict:
    """Name -> module map of importable backends (for tests and benchmarks)."""
    backends = {"python": _pykern}
    try:
        from . import _ckern

        backends["compiled"] = _ckern
    except ImportError:
        pass
    return backends
