"""Pure-Python/numpy fallback for the compiled kernels in ``_kernels.pyx``.

Same signatures, same tie-breaking; used when the extension is not built.
"""
import math

import numpy as np


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def lstm_forward(xw, u):
    batch, steps, g = xw.shape
    c = g // 4
    gates = np.empty((batch, steps, g))
    cs = np.empty((batch, steps, c))
    tcs = np.empty((batch, steps, c))
    hs = np.empty((batch, steps, c))
    h_prev = np.zeros((batch, c))
    c_prev = np.zeros((batch, c))
    for t in range(steps):
        z = xw[:, t] + h_prev @ u
        act = gates[:, t]
        act[:, :2 * c] = _sigmoid(z[:, :2 * c])
        act[:, 2 * c:3 * c] = np.tanh(z[:, 2 * c:3 * c])
        act[:, 3 * c:] = _sigmoid(z[:, 3 * c:])
        c_prev = act[:, c:2 * c] * c_prev + act[:, :c] * act[:, 2 * c:3 * c]
        cs[:, t] = c_prev
        tcs[:, t] = np.tanh(c_prev)
        h_prev = act[:, 3 * c:] * tcs[:, t]
        hs[:, t] = h_prev
    return gates, cs, tcs, hs


def lstm_backward(dh_seq, gates, cs, tcs, u):
    batch, steps, g = gates.shape
    c = g // 4
    dz = np.empty((batch, steps, g))
    dh_next = np.zeros((batch, c))
    dc_next = np.zeros((batch, c))
    for t in range(steps - 1, -1, -1):
        act = gates[:, t]
        i, f, gg, o = act[:, :c], act[:, c:2 * c], act[:, 2 * c:3 * c], act[:, 3 * c:]
        dh = dh_seq[:, t] + dh_next
        tc = tcs[:, t]
        dc = dh * o * (1.0 - tc * tc) + dc_next
        c_before = cs[:, t - 1] if t > 0 else 0.0
        d = dz[:, t]
        d[:, :c] = dc * gg * i * (1.0 - i)
        d[:, c:2 * c] = dc * c_before * f * (1.0 - f)
        d[:, 2 * c:3 * c] = dc * i * (1.0 - gg * gg)
        d[:, 3 * c:] = dh * tc * o * (1.0 - o)
        dc_next = dc * f
        if t > 0:
            dh_next = d @ u.T
    return dz


def _bounds(i, m, band):
    if band < 0:
        return 1, m
    return max(1, i - band), min(m, i + band)


def dtw_distance(a, b, band=-1):
    a = [float(v) for v in a]
    b = [float(v) for v in b]
    m = len(b)
    inf = math.inf
    prev = [0.0] + [inf] * m
    for i in range(1, len(a) + 1):
        cur = [inf] * (m + 1)
        ai = a[i - 1]
        lo, hi = _bounds(i, m, band)
        for j in range(lo, hi + 1):
            best = prev[j]
            if cur[j - 1] < best:
                best = cur[j - 1]
            if prev[j - 1] < best:
                best = prev[j - 1]
            cur[j] = abs(ai - b[j - 1]) + best
        prev = cur
    return prev[m]


def dtw_path(a, b, band=-1):
    a = [float(v) for v in a]
    b = [float(v) for v in b]
    n, m = len(a), len(b)
    inf = math.inf
    D = [[inf] * (m + 1) for _ in range(n + 1)]
    D[0][0] = 0.0
    for i in range(1, n + 1):
        lo, hi = _bounds(i, m, band)
        row, above = D[i], D[i - 1]
        for j in range(lo, hi + 1):
            row[j] = abs(a[i - 1] - b[j - 1]) + min(above[j], row[j - 1], above[j - 1])
    i, j = n, m
    ii, jj = [], []
    while True:
        ii.append(i - 1)
        jj.append(j - 1)
        if i == 1 and j == 1:
            break
        diag, up, left = D[i - 1][j - 1], D[i - 1][j], D[i][j - 1]
        if diag <= up and diag <= left:
            i, j = i - 1, j - 1
        elif up <= left:
            i -= 1
        else:
            j -= 1
    return D[n][m], np.array(ii[::-1], dtype=np.intp), np.array(jj[::-1], dtype=np.intp)
