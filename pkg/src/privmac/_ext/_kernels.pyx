# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops. Semantics are defined by ``_fallback.py``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp2, INFINITY
from libc.stdint cimport uint64_t, int64_t

cnp.import_array()


cdef inline int _parity(uint64_t v) nogil:
    v ^= v >> 32
    v ^= v >> 16
    v ^= v >> 8
    v ^= v >> 4
    v ^= v >> 2
    v ^= v >> 1
    return <int>(v & 1)


def hash_tables(rows, offsets, int input_bits):
    cdef uint64_t[:, ::1] rv = np.ascontiguousarray(rows, dtype=np.uint64)
    cdef uint64_t[::1] ov = np.ascontiguousarray(offsets, dtype=np.uint64)
    cdef Py_ssize_t nmem = rv.shape[0]
    cdef Py_ssize_t r = rv.shape[1]
    cdef Py_ssize_t nx = (<Py_ssize_t>1) << input_bits
    out = np.empty((nmem, nx), dtype=np.int64)
    cdef int64_t[:, ::1] outv = out
    cdef Py_ssize_t f, x, j
    cdef uint64_t word
    with nogil:
        for f in range(nmem):
            for x in range(nx):
                word = 0
                for j in range(r):
                    word = (word << 1) | <uint64_t>_parity(rv[f, j] & <uint64_t>x)
                outv[f, x] = <int64_t>(word ^ ov[f])
    return out


def accumulate_blocks(labels, states, Py_ssize_t nblocks):
    cdef int64_t[:, ::1] lab = np.ascontiguousarray(labels, dtype=np.int64)
    cdef double complex[:, ::1] st = np.ascontiguousarray(states, dtype=np.complex128)
    cdef Py_ssize_t nrows = lab.shape[0]
    cdef Py_ssize_t nx = lab.shape[1]
    cdef Py_ssize_t d = st.shape[1]
    out = np.zeros((nrows, nblocks, d), dtype=np.complex128)
    cdef double complex[:, :, ::1] ov = out
    cdef Py_ssize_t c, x, k, b
    with nogil:
        for c in range(nrows):
            for x in range(nx):
                b = lab[c, x]
                for k in range(d):
                    ov[c, b, k] = ov[c, b, k] + st[x, k]
    return out


def truncation_scan_tables(lp, proj, msize, lower, double upper, int n, double tol):
    """Odometer scan over all ``K**n`` joint sequences.

    ``lp[s, z]`` is the log2-probability of the ``S``-marginal of joint symbol ``z``
    (row ``s`` is the subset bitmask, the last row being the full joint),
    ``proj[s, z]`` the marginal symbol index, ``msize[s]`` the marginal alphabet size.
    Row 0 (empty subset) is the ``Y`` marginal, used for the set ``B`` as well.
    """
    cdef double[:, ::1] lpv = np.ascontiguousarray(lp, dtype=np.float64)
    cdef int64_t[:, ::1] pv = np.ascontiguousarray(proj, dtype=np.int64)
    cdef int64_t[::1] ms = np.ascontiguousarray(msize, dtype=np.int64)
    cdef double[::1] lo = np.ascontiguousarray(lower, dtype=np.float64)
    cdef Py_ssize_t nsub = lpv.shape[0]
    cdef Py_ssize_t K = lpv.shape[1]
    cdef Py_ssize_t full = nsub - 1
    cdef Py_ssize_t s, i, pos, z

    # marginal accumulators for every proper subset, concatenated (the full one only needs a max)
    offsets_arr = np.zeros(nsub, dtype=np.int64)
    cdef int64_t[::1] offsets = offsets_arr
    cdef Py_ssize_t total = 0, size
    for s in range(nsub - 1):
        offsets[s] = total
        size = 1
        for i in range(n):
            size *= ms[s]
        total += size
    offsets[full] = total
    acc_arr = np.zeros(total)
    cdef double[::1] acc = acc_arr

    partial_arr = np.zeros((n + 1, nsub))
    cdef double[:, ::1] partial = partial_arr
    index_arr = np.zeros((n + 1, nsub), dtype=np.int64)
    cdef int64_t[:, ::1] index = index_arr
    digits_arr = np.zeros(n, dtype=np.int64)
    cdef int64_t[::1] digits = digits_arr

    cdef double excluded = 0.0, kept = 0.0, p, qfull_max = 0.0
    cdef bint keep

    # prefix sums for the initial all-zero sequence
    for pos in range(n):
        for s in range(nsub):
            partial[pos + 1, s] = partial[pos, s] + lpv[s, 0]
            index[pos + 1, s] = index[pos, s] * ms[s] + pv[s, 0]

    while True:
        keep = True
        for s in range(nsub):
            if -partial[n, s] < lo[s] - tol:
                keep = False
                break
        if keep and -partial[n, 0] > upper + tol:
            keep = False
        p = exp2(partial[n, full])
        if keep:
            kept += p
            if p > qfull_max:
                qfull_max = p
            for s in range(nsub - 1):
                acc[offsets[s] + index[n, s]] += p
        else:
            excluded += p
        # advance the odometer (last position fastest)
        pos = n - 1
        while pos >= 0:
            digits[pos] += 1
            if digits[pos] < K:
                break
            digits[pos] = 0
            pos -= 1
        if pos < 0:
            break
        for i in range(pos, n):
            z = digits[i]
            for s in range(nsub):
                partial[i + 1, s] = partial[i, s] + lpv[s, z]
                index[i + 1, s] = index[i, s] * ms[s] + pv[s, z]

    maxq = np.zeros(nsub)
    for s in range(nsub - 1):
        maxq[s] = acc_arr[offsets[s]:offsets[s + 1]].max()
    maxq[full] = qfull_max
    support_y = int(np.count_nonzero(acc_arr[:offsets[1]] > 0))
    return excluded, kept, maxq, support_y
