# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled CTC forward pass; same contract as ``_kernels_py.ctc_forward``."""
from libc.math cimport INFINITY, exp, log1p
cimport numpy as cnp
import numpy as np

cnp.import_array()


cdef inline double _logadd(double a, double b) nogil:
    if a == -INFINITY:
        return b
    if b == -INFINITY:
        return a
    if a < b:
        a, b = b, a
    # past this gap the correction is below double precision; skipping exp avoids
    # the slow underflow path
    if b - a < -40.0:
        return a
    return a + log1p(exp(b - a))


def ctc_forward(const double[:, ::1] log_probs, const cnp.int64_t[::1] labels, Py_ssize_t blank):
    cdef Py_ssize_t T = log_probs.shape[0]
    cdef Py_ssize_t L = labels.shape[0]
    cdef Py_ssize_t S = 2 * L + 1
    cdef Py_ssize_t t, s, lo, hi
    cdef cnp.int64_t[::1] ext = np.full(S, blank, dtype=np.int64)
    cdef unsigned char[::1] skip = np.zeros(S, dtype=np.uint8)
    cdef double[::1] alpha = np.full(S, -INFINITY)
    cdef double[::1] nxt = np.empty(S)
    cdef double acc

    for s in range(L):
        ext[2 * s + 1] = labels[s]
        if s > 0 and labels[s] != labels[s - 1]:
            skip[2 * s + 1] = 1

    with nogil:
        alpha[0] = log_probs[0, blank]
        if S > 1:
            alpha[1] = log_probs[0, ext[1]]
        for t in range(1, T):
            # states outside [lo, hi) are either not reachable yet or can no
            # longer reach the end of the transcript in the remaining frames
            lo = S - 2 * (T - t)
            if lo < 0:
                lo = 0
            hi = 2 * t + 2
            if hi > S:
                hi = S
            for s in range(lo):
                nxt[s] = -INFINITY
            for s in range(hi, S):
                nxt[s] = -INFINITY
            for s in range(lo, hi):
                acc = alpha[s]
                if s >= 1:
                    acc = _logadd(acc, alpha[s - 1])
                if s >= 2 and skip[s]:
                    acc = _logadd(acc, alpha[s - 2])
                if acc == -INFINITY:
                    nxt[s] = -INFINITY
                else:
                    nxt[s] = acc + log_probs[t, ext[s]]
            for s in range(S):
                alpha[s] = nxt[s]
    if S == 1:
        return alpha[0]
    return _logadd(alpha[S - 1], alpha[S - 2])
