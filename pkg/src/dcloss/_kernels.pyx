# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops.

Both functions are pure: randomness is drawn by the caller and passed in, so
this module and :mod:`dcloss._pykernels` return identical arrays for identical
inputs.
"""

import numpy as np

cimport numpy as cnp
from libc.stdint cimport int32_t, int64_t, uint8_t, uint16_t

cnp.import_array()


def erasure_windows(const double[:, ::1] u, double pi_start, double p_gb, double p_bb):
    """Run one Markov erasure chain per row of ``u``.

    Slot 0 is bad iff ``u[r, 0] < pi_start``; slot i > 0 is bad iff
    ``u[r, i]`` is below ``p_bb`` (previous slot bad) or ``p_gb`` (previous
    slot good).
    """
    cdef Py_ssize_t rows = u.shape[0], n = u.shape[1], r, i
    out = np.empty((rows, n), dtype=np.uint8)
    cdef uint8_t[:, ::1] o = out
    cdef uint8_t s
    with nogil:
        for r in range(rows):
            if n == 0:
                continue
            s = 1 if u[r, 0] < pi_start else 0
            o[r, 0] = s
            for i in range(1, n):
                if s:
                    s = 1 if u[r, i] < p_bb else 0
                else:
                    s = 1 if u[r, i] < p_gb else 0
                o[r, i] = s
    return out


cdef inline int32_t _sub(int32_t x, int32_t y, int32_t order, bint binary) noexcept nogil:
    if binary:
        return x ^ y
    x = x - y
    if x < 0:
        x += order
    return x


def batch_rank(uint16_t[:, :, ::1] mats, const int32_t[::1] log, const int32_t[::1] exp,
               int order, bint binary):
    """Rank of every ``n x k`` matrix in the batch; ``mats`` is overwritten."""
    cdef Py_ssize_t batch = mats.shape[0], n = mats.shape[1], k = mats.shape[2]
    cdef Py_ssize_t b, r, c, p, i, j
    cdef int32_t q1 = order - 1, lp, f, x, t
    ranks = np.zeros(batch, dtype=np.int32)
    cdef int32_t[::1] rk = ranks
    with nogil:
        for b in range(batch):
            r = 0
            for c in range(k):
                if r == n:
                    break
                p = r
                while p < n and mats[b, p, c] == 0:
                    p += 1
                if p == n:
                    continue
                if p != r:
                    for j in range(c, k):
                        t = mats[b, p, j]
                        mats[b, p, j] = mats[b, r, j]
                        mats[b, r, j] = <uint16_t>t
                lp = log[mats[b, r, c]]
                for i in range(r + 1, n):
                    x = mats[b, i, c]
                    if x == 0:
                        continue
                    # f = a[i, c] / a[r, c]
                    f = log[x] - lp + q1
                    for j in range(c, k):
                        x = mats[b, r, j]
                        if x == 0:
                            continue
                        x = exp[f + log[x]]
                        mats[b, i, j] = <uint16_t>_sub(mats[b, i, j], x, order, binary)
                r += 1
            rk[b] = <int32_t>r
    return ranks
