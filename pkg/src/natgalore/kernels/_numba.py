"""Numba-compiled versions of the hot kernels.

Same contracts as :mod:`natgalore.kernels._numpy`; fully looped so the
whole body stays in nopython mode.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def cholesky(s):
    k = s.shape[0]
    L = np.zeros((k, k))
    for j in range(k):
        d = s[j, j]
        for t in range(j):
            d -= L[j, t] * L[j, t]
        if d <= 0.0 or not np.isfinite(d):
            return L, j
        L[j, j] = np.sqrt(d)
        for i in range(j + 1, k):
            acc = s[i, j]
            for t in range(j):
                acc -= L[i, t] * L[j, t]
            L[i, j] = acc / L[j, j]
    return L, -1


@njit(cache=True)
def solve_cho(L, y):
    k = L.shape[0]
    w = np.empty(k)
    for i in range(k):
        acc = y[i]
        for t in range(i):
            acc -= L[i, t] * w[t]
        w[i] = acc / L[i, i]
    z = np.empty(k)
    for i in range(k - 1, -1, -1):
        acc = w[i]
        for t in range(i + 1, k):
            acc -= L[t, i] * z[t]
        z[i] = acc / L[i, i]
    return z


@njit(cache=True)
def mgs(a):
    n, r = a.shape
    Q = a.copy()
    rdiag = np.zeros(r)
    col_scale = 0.0
    for j in range(r):
        s = 0.0
        for i in range(n):
            s += Q[i, j] * Q[i, j]
        nrm = np.sqrt(s)
        if nrm > col_scale:
            col_scale = nrm
    tol = 1e-12 * col_scale
    for j in range(r):
        for _ in range(2):
            for i in range(j):
                dot = 0.0
                for t in range(n):
                    dot += Q[t, i] * Q[t, j]
                for t in range(n):
                    Q[t, j] -= dot * Q[t, i]
        s = 0.0
        for t in range(n):
            s += Q[t, j] * Q[t, j]
        nrm = np.sqrt(s)
        if nrm <= tol or nrm == 0.0:
            rdiag[j] = 0.0
            _fallback_column(Q, j, n)
        else:
            rdiag[j] = nrm
            for t in range(n):
                Q[t, j] /= nrm
    return Q, rdiag


@njit(cache=True)
def _fallback_column(Q, j, n):
    c = np.zeros(n)
    for k in range(n):
        for t in range(n):
            c[t] = 0.0
        c[k] = 1.0
        for _ in range(2):
            for i in range(j):
                dot = 0.0
                for t in range(n):
                    dot += Q[t, i] * c[t]
                for t in range(n):
                    c[t] -= dot * Q[t, i]
        s = 0.0
        for t in range(n):
            s += c[t] * c[t]
        nrm = np.sqrt(s)
        if nrm > 0.5:
            for t in range(n):
                Q[t, j] = c[t] / nrm
            return


@njit(cache=True)
def adam_direction(m, v, g, beta1, beta2, eps, c1, c2, eps_inside):
    rows, cols = m.shape
    u = np.empty((rows, cols))
    for i in range(rows):
        for j in range(cols):
            m[i, j] = beta1 * m[i, j] + (1.0 - beta1) * g[i, j]
            v[i, j] = beta2 * v[i, j] + (1.0 - beta2) * g[i, j] * g[i, j]
            mhat = m[i, j] / c1
            vhat = v[i, j] / c2
            if eps_inside:
                u[i, j] = mhat / np.sqrt(vhat + eps)
            else:
                u[i, j] = mhat / (np.sqrt(vhat) + eps)
    return u
