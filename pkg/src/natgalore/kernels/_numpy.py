"""Pure-numpy reference implementations of the hot kernels.

Signature-compatible with :mod:`natgalore.kernels._numba`; selected when
numba is unavailable or disabled via ``NATGALORE_BACKEND=numpy``.
"""

import numpy as np


def cholesky(s):
    """Lower Cholesky factor of ``s``.

    Returns ``(L, pivot)`` where ``pivot`` is -1 on success, else the
    index of the first non-positive pivot.
    """
    k = s.shape[0]
    L = np.zeros((k, k))
    for j in range(k):
        d = s[j, j] - L[j, :j] @ L[j, :j]
        if d <= 0.0 or not np.isfinite(d):
            return L, j
        L[j, j] = np.sqrt(d)
        if j + 1 < k:
            L[j + 1 :, j] = (s[j + 1 :, j] - L[j + 1 :, :j] @ L[j, :j]) / L[j, j]
    return L, -1


def solve_cho(L, y):
    """Solve L L^T z = y by forward then backward substitution."""
    k = L.shape[0]
    w = np.empty(k)
    for i in range(k):
        w[i] = (y[i] - L[i, :i] @ w[:i]) / L[i, i]
    z = np.empty(k)
    for i in range(k - 1, -1, -1):
        z[i] = (w[i] - L[i + 1 :, i] @ z[i + 1 :]) / L[i, i]
    return z


def mgs(a):
    """Modified Gram-Schmidt orthonormalization of the columns of ``a``.

    Returns ``(Q, rdiag)`` with orthonormal Q. Columns whose residual
    collapses (rank deficiency) are replaced by the first canonical
    basis vector orthogonal to the columns built so far; their rdiag
    entry is 0.
    """
    n, r = a.shape
    Q = np.array(a, dtype=np.float64, copy=True)
    rdiag = np.zeros(r)
    col_scale = 0.0
    for j in range(r):
        nrm = np.sqrt(Q[:, j] @ Q[:, j])
        if nrm > col_scale:
            col_scale = nrm
    tol = 1e-12 * col_scale
    for j in range(r):
        # two orthogonalization passes for stability
        for _ in range(2):
            for i in range(j):
                Q[:, j] -= (Q[:, i] @ Q[:, j]) * Q[:, i]
        nrm = np.sqrt(Q[:, j] @ Q[:, j])
        if nrm <= tol or nrm == 0.0:
            rdiag[j] = 0.0
            Q[:, j] = _fallback_column(Q, j, n)
        else:
            rdiag[j] = nrm
            Q[:, j] /= nrm
    return Q, rdiag


def _fallback_column(Q, j, n):
    for k in range(n):
        c = np.zeros(n)
        c[k] = 1.0
        for _ in range(2):
            for i in range(j):
                c -= (Q[:, i] @ c) * Q[:, i]
        nrm = np.sqrt(c @ c)
        if nrm > 0.5:
            return c / nrm
    return Q[:, j]  # unreachable for j < n


def adam_direction(m, v, g, beta1, beta2, eps, c1, c2, eps_inside):
    """In-place Adam moment update; returns the update direction.

    ``c1``/``c2`` are the bias-correction divisors (pass 1.0 to disable);
    ``eps_inside`` selects m/sqrt(v+eps) over m/(sqrt(v)+eps).
    """
    m *= beta1
    m += (1.0 - beta1) * g
    v *= beta2
    v += (1.0 - beta2) * g * g
    mhat = m / c1
    vhat = v / c2
    if eps_inside:
        return mhat / np.sqrt(vhat + eps)
    return mhat / (np.sqrt(vhat) + eps)
