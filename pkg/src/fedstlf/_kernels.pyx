# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops: LSTM recurrences and dynamic-time-warping programs."""
import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, INFINITY
from scipy.linalg.cython_blas cimport dgemm

cnp.import_array()


def lstm_forward(double[:, :, ::1] xw, double[:, ::1] u):
    """Run the recurrence given precomputed ``x @ w + b``.

    Returns activated gates, cell states, tanh(cell) and hidden states.
    Transcendentals go through numpy's vectorised tanh one time step at a
    time (sigmoid as 0.5 * (1 + tanh(z / 2))); scalar libm calls were the
    bottleneck of this kernel.
    """
    cdef int B = xw.shape[0], T = xw.shape[1], G = xw.shape[2]
    cdef int c = G // 4
    gates_a = np.empty((B, T, G))
    cs_a = np.empty((B, T, c))
    tcs_a = np.empty((B, T, c))
    hs_a = np.empty((B, T, c))
    z_a = np.empty((B, G))
    cell_a = np.empty((B, c))
    cdef double[:, :, ::1] gates = gates_a
    cdef double[:, :, ::1] cs = cs_a
    cdef double[:, :, ::1] tcs = tcs_a
    cdef double[:, :, ::1] hs = hs_a
    cdef double[:, ::1] z = z_a
    cdef double[:, ::1] cell = cell_a
    cdef int b, t, j, ldh = T * c
    cdef double one = 1.0, cprev
    cdef char tn = b'N'
    for t in range(T):
        with nogil:
            for b in range(B):
                for j in range(G):
                    z[b, j] = xw[b, t, j]
            if t > 0:
                # z += h_{t-1} @ u   (column-major view)
                dgemm(&tn, &tn, &G, &B, &c, &one, &u[0, 0], &G, &hs[0, t - 1, 0], &ldh,
                      &one, &z[0, 0], &G)
            for b in range(B):
                for j in range(2 * c):
                    z[b, j] = 0.5 * z[b, j]
                for j in range(3 * c, G):
                    z[b, j] = 0.5 * z[b, j]
        np.tanh(z_a, out=z_a)
        with nogil:
            for b in range(B):
                for j in range(c):
                    gates[b, t, j] = 0.5 * (1.0 + z[b, j])
                    gates[b, t, c + j] = 0.5 * (1.0 + z[b, c + j])
                    gates[b, t, 2 * c + j] = z[b, 2 * c + j]
                    gates[b, t, 3 * c + j] = 0.5 * (1.0 + z[b, 3 * c + j])
                    cprev = cs[b, t - 1, j] if t > 0 else 0.0
                    cs[b, t, j] = gates[b, t, c + j] * cprev + gates[b, t, j] * gates[b, t, 2 * c + j]
                    cell[b, j] = cs[b, t, j]
        np.tanh(cell_a, out=cell_a)
        with nogil:
            for b in range(B):
                for j in range(c):
                    tcs[b, t, j] = cell[b, j]
                    hs[b, t, j] = gates[b, t, 3 * c + j] * cell[b, j]
    return gates_a, cs_a, tcs_a, hs_a


def lstm_backward(double[:, :, ::1] dh_seq, double[:, :, ::1] gates, double[:, :, ::1] cs,
                  double[:, :, ::1] tcs, double[:, ::1] u):
    """Back-propagate through time; returns pre-activation gate gradients ``[B, T, 4c]``."""
    cdef int B = gates.shape[0], T = gates.shape[1], G = gates.shape[2]
    cdef int c = G // 4
    dz_a = np.empty((B, T, G))
    cdef double[:, :, ::1] dz = dz_a
    cdef double[:, ::1] dh_next = np.zeros((B, c))
    cdef double[:, ::1] dc_next = np.zeros((B, c))
    cdef int b, t, j, ldz = T * G
    cdef double one = 1.0, zero = 0.0
    cdef double i_, f_, g_, o_, tc, dh, dc, cb
    cdef char tt = b'T', tn = b'N'
    with nogil:
        for t in range(T - 1, -1, -1):
            for b in range(B):
                for j in range(c):
                    i_ = gates[b, t, j]
                    f_ = gates[b, t, c + j]
                    g_ = gates[b, t, 2 * c + j]
                    o_ = gates[b, t, 3 * c + j]
                    tc = tcs[b, t, j]
                    dh = dh_seq[b, t, j] + dh_next[b, j]
                    dc = dh * o_ * (1.0 - tc * tc) + dc_next[b, j]
                    cb = cs[b, t - 1, j] if t > 0 else 0.0
                    dz[b, t, j] = dc * g_ * i_ * (1.0 - i_)
                    dz[b, t, c + j] = dc * cb * f_ * (1.0 - f_)
                    dz[b, t, 2 * c + j] = dc * i_ * (1.0 - g_ * g_)
                    dz[b, t, 3 * c + j] = dh * tc * o_ * (1.0 - o_)
                    dc_next[b, j] = dc * f_
            if t > 0:
                # dh_next = dz[:, t] @ u.T
                dgemm(&tt, &tn, &c, &B, &G, &one, &u[0, 0], &G, &dz[0, t, 0], &ldz,
                      &zero, &dh_next[0, 0], &c)
    return dz_a


cdef inline double _min3(double a, double b, double c) nogil:
    if b < a:
        a = b
    if c < a:
        a = c
    return a


cdef void _fill(double[::1] a, double[::1] b, int band, double[:, ::1] D) nogil:
    cdef int n = a.shape[0], m = b.shape[0], i, j, lo, hi
    for i in range(n + 1):
        for j in range(m + 1):
            D[i, j] = INFINITY
    D[0, 0] = 0.0
    for i in range(1, n + 1):
        lo = 1
        hi = m
        if band >= 0:
            if i - band > lo:
                lo = i - band
            if i + band < hi:
                hi = i + band
        for j in range(lo, hi + 1):
            D[i, j] = fabs(a[i - 1] - b[j - 1]) + _min3(D[i - 1, j], D[i, j - 1], D[i - 1, j - 1])


def dtw_distance(double[::1] a, double[::1] b, int band=-1):
    """Cumulative |a_i - b_j| cost of the best warping path (band < 0: unconstrained)."""
    cdef int n = a.shape[0], m = b.shape[0], i, j, lo, hi, r, q
    cdef double[:, ::1] rows = np.full((2, m + 1), INFINITY)
    rows[0, 0] = 0.0
    with nogil:
        for i in range(1, n + 1):
            r = i & 1
            q = 1 - r
            lo = 1
            hi = m
            if band >= 0:
                if i - band > lo:
                    lo = i - band
                if i + band < hi:
                    hi = i + band
            for j in range(m + 1):
                rows[r, j] = INFINITY
            for j in range(lo, hi + 1):
                rows[r, j] = fabs(a[i - 1] - b[j - 1]) + _min3(rows[q, j], rows[r, j - 1],
                                                              rows[q, j - 1])
    return rows[n & 1, m]


def dtw_path(double[::1] a, double[::1] b, int band=-1):
    """Distance plus the optimal alignment as two index arrays."""
    cdef int n = a.shape[0], m = b.shape[0]
    D_a = np.empty((n + 1, m + 1))
    cdef double[:, ::1] D = D_a
    _fill(a, b, band, D)
    ii = np.empty(n + m, dtype=np.intp)
    jj = np.empty(n + m, dtype=np.intp)
    cdef Py_ssize_t[::1] pi = ii
    cdef Py_ssize_t[::1] pj = jj
    cdef int i = n, j = m, k = 0
    cdef double diag, up, left
    with nogil:
        while True:
            pi[k] = i - 1
            pj[k] = j - 1
            k += 1
            if i == 1 and j == 1:
                break
            diag = D[i - 1, j - 1]
            up = D[i - 1, j]
            left = D[i, j - 1]
            # tie order: diagonal, then vertical, then horizontal
            if diag <= up and diag <= left:
                i -= 1
                j -= 1
            elif up <= left:
                i -= 1
            else:
                j -= 1
    return D_a[n, m], ii[:k][::-1].copy(), jj[:k][::-1].copy()
