# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled versions of the hot contraction kernels.

Same contracts as ``_pykern``. The chains these kernels walk are products of
many small matrices (bond dimensions of a few dozen at most), where per-call
dispatch overhead dominates vectorized execution; hand-rolled loops over
typed memoryviews remove that overhead.
"""

from libc.math cimport INFINITY, log, sqrt

import numpy as np


cdef inline void _gemm(const double[:, ::1] a, const double[:, ::1] b,
                       double[:, ::1] out, Py_ssize_t m, Py_ssize_t k,
                       Py_ssize_t n) noexcept nogil:
    # out = a @ b for row-major blocks
    cdef Py_ssize_t i, j, l
    cdef double acc
    for i in range(m):
        for j in range(n):
            out[i, j] = 0.0
        for l in range(k):
            acc = a[i, l]
            if acc != 0.0:
                for j in range(n):
                    out[i, j] += acc * b[l, j]


cdef inline double _density_step_right(const double[:, :, ::1] a,
                                       const double[:, ::1] rin,
                                       double[:, ::1] rout,
                                       double[:, ::1] tmp,
                                       Py_ssize_t dl, Py_ssize_t dr) noexcept nogil:
    # rout = a0 rin a0^T + a1 rin a1^T; returns the trace
    cdef Py_ssize_t s, i, j, l
    cdef double acc, trace = 0.0
    for i in range(dl):
        for j in range(dl):
            rout[i, j] = 0.0
    for s in range(2):
        _gemm(a[s], rin, tmp, dl, dr, dr)
        for i in range(dl):
            for j in range(dl):
                acc = 0.0
                for l in range(dr):
                    acc += tmp[i, l] * a[s, j, l]
                rout[i, j] += acc
    for i in range(dl):
        trace += rout[i, i]
    return trace


cdef inline double _density_step_left(const double[:, :, ::1] a,
                                      const double[:, ::1] lin,
                                      double[:, ::1] lout,
                                      double[:, ::1] tmp,
                                      Py_ssize_t dl, Py_ssize_t dr) noexcept nogil:
    # lout = a0^T lin a0 + a1^T lin a1; returns the trace
    cdef Py_ssize_t s, i, j, l
    cdef double acc, trace = 0.0
    for i in range(dr):
        for j in range(dr):
            lout[i, j] = 0.0
    for s in range(2):
        _gemm(lin, a[s], tmp, dl, dl, dr)
        for i in range(dr):
            for j in range(dr):
                acc = 0.0
                for l in range(dl):
                    acc += a[s, l, i] * tmp[l, j]
                lout[i, j] += acc
    for i in range(dr):
        trace += lout[i, i]
    return trace


cdef inline void _scale(double[:, ::1] m, Py_ssize_t rows, Py_ssize_t cols,
                        double factor) noexcept nogil:
    cdef Py_ssize_t i, j
    for i in range(rows):
        for j in range(cols):
            m[i, j] *= factor


def _right_density_envs(list tensors, Py_ssize_t maxd):
    """Trace-normalized right transfer environments, index i covers sites i..n-1."""
    cdef Py_ssize_t n = len(tensors)
    rights = [None] * (n + 1)
    rights[n] = np.ones((1, 1))
    tmp = np.empty((maxd, maxd))
    cdef double[:, ::1] tmpv = tmp
    cdef double[:, ::1] rin, rout
    cdef double[:, :, ::1] av
    cdef double trace
    cdef Py_ssize_t i, dl, dr
    for i in range(n - 1, 0, -1):
        a = tensors[i]
        dl, dr = a.shape[1], a.shape[2]
        av = a
        rin = rights[i + 1]
        out = np.empty((dl, dl))
        rout = out
        with nogil:
            trace = _density_step_right(av, rin, rout, tmpv, dl, dr)
            _scale(rout, dl, dl, 1.0 / trace)
        rights[i] = out
    return rights


cdef inline void _pmm(const double* a, const double* b, double* c,
                      Py_ssize_t m, Py_ssize_t k, Py_ssize_t n) noexcept nogil:
    # c = a @ b over raw row-major blocks
    cdef Py_ssize_t i, j, l
    cdef double acc
    for i in range(m):
        for j in range(n):
            c[i * n + j] = 0.0
        for l in range(k):
            acc = a[i * k + l]
            if acc != 0.0:
                for j in range(n):
                    c[i * n + j] += acc * b[l * n + j]


cdef inline double _pdot(const double* a, const double* b, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t i
    cdef double acc = 0.0
    for i in range(n):
        acc += a[i] * b[i]
    return acc


cdef void _rdm_sweep(const double* buf, const Py_ssize_t* offs,
                     const Py_ssize_t* dims, Py_ssize_t n,
                     double* renv, const Py_ssize_t* roffs,
                     double* out, double* ws, Py_ssize_t maxd) noexcept nogil:
    # One pass over the packed chain: right density environments, then left
    # sweep emitting every trace-normalized 2x2 density matrix.
    cdef Py_ssize_t i, j, l, dl, dr, square
    cdef const double* a0
    cdef const double* a1
    cdef double* tmp = ws
    cdef double* left = ws + maxd * maxd
    cdef double* lnew = ws + 2 * maxd * maxd
    cdef double* tbuf = ws + 3 * maxd * maxd
    cdef double* ubuf = ws + 4 * maxd * maxd
    cdef double* swp
    cdef double trace, r00, r01, r10, r11, offdiag
    cdef const double* rin

    renv[roffs[n]] = 1.0
    for i in range(n - 1, 0, -1):
        dl = dims[2 * i]
        dr = dims[2 * i + 1]
        a0 = buf + offs[i]
        a1 = a0 + dl * dr
        rin = renv + roffs[i + 1]
        # rout = a0 rin a0^T + a1 rin a1^T, trace-normalized
        _pmm(a0, rin, tmp, dl, dr, dr)
        for j in range(dl):
            for l in range(dl):
                renv[roffs[i] + j * dl + l] = _pdot(tmp + j * dr, a0 + l * dr, dr)
        _pmm(a1, rin, tmp, dl, dr, dr)
        for j in range(dl):
            for l in range(dl):
                renv[roffs[i] + j * dl + l] += _pdot(tmp + j * dr, a1 + l * dr, dr)
        trace = 0.0
        for j in range(dl):
            trace += renv[roffs[i] + j * dl + j]
        trace = 1.0 / trace
        square = dl * dl
        for j in range(square):
            renv[roffs[i] + j] *= trace

    left[0] = 1.0
    for i in range(n):
        dl = dims[2 * i]
        dr = dims[2 * i + 1]
        a0 = buf + offs[i]
        a1 = a0 + dl * dr
        rin = renv + roffs[i + 1]
        # u_t = (left a_t) rin ; rho_st = <a_s, u_t>
        _pmm(left, a0, tmp, dl, dl, dr)
        _pmm(tmp, rin, ubuf, dl, dr, dr)
        r00 = _pdot(a0, ubuf, dl * dr)
        r10 = _pdot(a1, ubuf, dl * dr)
        _pmm(left, a1, tmp, dl, dl, dr)
        _pmm(tmp, rin, ubuf, dl, dr, dr)
        r01 = _pdot(a0, ubuf, dl * dr)
        r11 = _pdot(a1, ubuf, dl * dr)
        trace = r00 + r11
        offdiag = 0.5 * (r01 + r10) / trace
        out[4 * i] = r00 / trace
        out[4 * i + 1] = offdiag
        out[4 * i + 2] = offdiag
        out[4 * i + 3] = r11 / trace
        if i < n - 1:
            # lnew = a0^T left a0 + a1^T left a1, trace-normalized
            _pmm(left, a0, tmp, dl, dl, dr)
            for j in range(dr):
                for l in range(dr):
                    lnew[j * dr + l] = 0.0
            for j in range(dl):
                for l in range(dr):
                    ubuf[l * dl + j] = a0[j * dr + l]  # a0^T
            _pmm(ubuf, tmp, tbuf, dr, dl, dr)
            for j in range(dr * dr):
                lnew[j] += tbuf[j]
            _pmm(left, a1, tmp, dl, dl, dr)
            for j in range(dl):
                for l in range(dr):
                    ubuf[l * dl + j] = a1[j * dr + l]
            _pmm(ubuf, tmp, tbuf, dr, dl, dr)
            for j in range(dr * dr):
                lnew[j] += tbuf[j]
            trace = 0.0
            for j in range(dr):
                trace += lnew[j * dr + j]
            trace = 1.0 / trace
            for j in range(dr * dr):
                lnew[j] *= trace
            swp = left
            left = lnew
            lnew = swp


def site_rdms(list tensors):
    """All single-site reduced density matrices of the chain.

    The chain is packed into one flat buffer and swept inside a single
    GIL-free region, so concurrent decodes scale across threads.
    """
    cdef Py_ssize_t n = len(tensors)
    dims_arr = np.empty(2 * n, dtype=np.intp)
    offs_arr = np.empty(n + 1, dtype=np.intp)
    roffs_arr = np.empty(n + 1, dtype=np.intp)
    cdef Py_ssize_t[::1] dims = dims_arr
    cdef Py_ssize_t[::1] offs = offs_arr
    cdef Py_ssize_t[::1] roffs = roffs_arr
    cdef Py_ssize_t i, maxd = 1, total = 0, rtotal = 0
    for i in range(n):
        t = tensors[i]
        dims[2 * i] = t.shape[1]
        dims[2 * i + 1] = t.shape[2]
        offs[i] = total
        total += 2 * dims[2 * i] * dims[2 * i + 1]
        if dims[2 * i] > maxd:
            maxd = dims[2 * i]
        if dims[2 * i + 1] > maxd:
            maxd = dims[2 * i + 1]
    offs[n] = total
    for i in range(1, n + 1):
        roffs[i] = rtotal
        rtotal += dims[2 * i] * dims[2 * i] if i < n else 1
    roffs[0] = rtotal  # unused slot

    buf_arr = np.empty(total)
    cdef double[::1] buf = buf_arr
    for i in range(n):
        buf_arr[offs[i]:offs[i + 1]] = tensors[i].ravel()
    renv_arr = np.empty(max(rtotal, 1))
    ws_arr = np.empty(5 * maxd * maxd)
    out_arr = np.empty((n, 2, 2))
    cdef double[::1] renv = renv_arr
    cdef double[::1] ws = ws_arr
    cdef double[:, :, ::1] outv = out_arr
    if n == 0:
        return out_arr
    with nogil:
        _rdm_sweep(&buf[0], &offs[0], &dims[0], n, &renv[0], &roffs[0],
                   &outv[0, 0, 0], &ws[0], maxd)
    return out_arr


def log_norm_sq(list tensors):
    """ln <psi|psi> via the scaled transfer contraction."""
    cdef Py_ssize_t maxd = 1
    for t in tensors:
        maxd = max(maxd, t.shape[1], t.shape[2])
    env = np.ones((1, 1))
    tmp = np.empty((maxd, maxd))
    cdef double[:, ::1] tmpv = tmp
    cdef double[:, ::1] ev, enew
    cdef double[:, :, ::1] av
    cdef double acc = 0.0, trace
    cdef Py_ssize_t dl, dr
    for a in tensors:
        dl, dr = a.shape[1], a.shape[2]
        av = a
        ev = env
        out = np.empty((dr, dr))
        enew = out
        with nogil:
            trace = _density_step_left(av, ev, enew, tmpv, dl, dr)
        if trace <= 0.0:
            return -INFINITY
        with nogil:
            _scale(enew, dr, dr, 1.0 / trace)
        acc += log(trace)
        env = out
    return acc


def logamp_batch(list tensors, const double[:, :, ::1] states):
    """Batched zipper overlaps in the log domain; see the python backend."""
    cdef Py_ssize_t batch = states.shape[0]
    cdef Py_ssize_t n = len(tensors)
    cdef Py_ssize_t maxd = 1
    for t in tensors:
        maxd = max(maxd, t.shape[1], t.shape[2])
    vec_arr = np.ones((batch, maxd))
    wrk_arr = np.empty((batch, maxd))
    logmag = np.zeros(batch)
    cdef double[:, ::1] vec = vec_arr, wrk = wrk_arr
    cdef double[::1] acc = logmag
    cdef double[:, :, ::1] av
    cdef Py_ssize_t i, b, j, l, dl, dr
    cdef double s0, s1, total, scale, value
    for i in range(n):
        a = tensors[i]
        dl, dr = a.shape[1], a.shape[2]
        av = a
        with nogil:
            for b in range(batch):
                if acc[b] == -INFINITY:
                    for j in range(dr):
                        vec[b, j] = 0.0
                    continue
                s0 = states[b, i, 0]
                s1 = states[b, i, 1]
                for j in range(dr):
                    total = 0.0
                    for l in range(dl):
                        total += vec[b, l] * (s0 * av[0, l, j] + s1 * av[1, l, j])
                    wrk[b, j] = total
                total = 0.0
                for j in range(dr):
                    total += wrk[b, j] * wrk[b, j]
                scale = sqrt(total)
                if scale == 0.0:
                    acc[b] = -INFINITY
                    for j in range(dr):
                        vec[b, j] = 0.0
                else:
                    acc[b] += log(scale)
                    for j in range(dr):
                        vec[b, j] = wrk[b, j] / scale
    signs = np.empty(batch)
    cdef double[::1] sv = signs
    with nogil:
        for b in range(batch):
            value = vec[b, 0]
            if acc[b] == -INFINITY or value == 0.0:
                acc[b] = -INFINITY
                sv[b] = 0.0
            else:
                acc[b] += log(value if value > 0.0 else -value)
                sv[b] = 1.0 if value > 0.0 else -1.0
    return logmag, signs


def sample_bits(list tensors, const double[:, ::1] uniforms):
    """Autoregressive sigma-z sampling driven by pre-drawn uniforms."""
    cdef Py_ssize_t batch = uniforms.shape[0]
    cdef Py_ssize_t n = len(tensors)
    cdef Py_ssize_t maxd = 1
    for t in tensors:
        maxd = max(maxd, t.shape[1], t.shape[2])
    rights = _right_density_envs(tensors, maxd)

    bits_arr = np.empty((batch, n), dtype=np.uint8)
    cdef unsigned char[:, ::1] bits = bits_arr
    vec_arr = np.ones((batch, maxd))
    w0_arr = np.empty((batch, maxd))
    w1_arr = np.empty((batch, maxd))
    cdef double[:, ::1] vec = vec_arr, w0 = w0_arr, w1 = w1_arr
    cdef double[:, ::1] rv
    cdef double[:, :, ::1] av
    cdef Py_ssize_t i, b, j, l, dl, dr
    cdef double p0, p1, total, scale
    cdef unsigned char pick
    for i in range(n):
        a = tensors[i]
        dl, dr = a.shape[1], a.shape[2]
        av = a
        rv = rights[i + 1]
        with nogil:
            for b in range(batch):
                for j in range(dr):
                    p0 = 0.0
                    p1 = 0.0
                    for l in range(dl):
                        p0 += vec[b, l] * av[0, l, j]
                        p1 += vec[b, l] * av[1, l, j]
                    w0[b, j] = p0
                    w1[b, j] = p1
                p0 = 0.0
                p1 = 0.0
                for j in range(dr):
                    total = 0.0
                    scale = 0.0
                    for l in range(dr):
                        total += rv[j, l] * w0[b, l]
                        scale += rv[j, l] * w1[b, l]
                    p0 += w0[b, j] * total
                    p1 += w1[b, j] * scale
                if p0 < 0.0:
                    p0 = 0.0
                if p1 < 0.0:
                    p1 = 0.0
                pick = 1 if uniforms[b, i] * (p0 + p1) >= p0 else 0
                bits[b, i] = pick
                total = 0.0
                for j in range(dr):
                    scale = w1[b, j] if pick else w0[b, j]
                    vec[b, j] = scale
                    total += scale * scale
                scale = sqrt(total)
                for j in range(dr):
                    vec[b, j] /= scale
    return bits_arr
