"""Dense linear-algebra kernels: products, compact SVD, Cholesky.

Matrices are 2-D float64 numpy arrays throughout. The compact SVD uses
block power (subspace) iteration with Gram-Schmidt orthonormalization
and a small Jacobi finalization, keeping only the leading-r triplets.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import DimensionError, NotPositiveDefiniteError, NumericalError

SVD_TOL = 1e-10
SVD_MAX_ITERS = 1000
_JACOBI_TOL = 1e-28  # on gamma^2 relative to alpha*beta
_JACOBI_MAX_SWEEPS = 60


@dataclass
class CompactSVD:
    """Leading-r singular triplets: a ~= P @ diag(sigma) @ Q.T."""

    P: np.ndarray
    sigma: np.ndarray
    Q: np.ndarray


@dataclass
class CholeskyFactor:
    """Lower-triangular L with L @ L.T equal to the factored matrix."""

    L: np.ndarray


def as_matrix(x, name="matrix"):
    """Validate external input as a finite 2-D float64 matrix."""
    a = np.asarray(x, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise DimensionError(f"{name} must be 2-D with positive dimensions, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise NumericalError(f"{name} contains NaN or Inf")
    return np.ascontiguousarray(a)


def matmul(a, b):
    """Matrix product a @ b."""
    if a.ndim != 2 or b.ndim != 2:
        raise DimensionError("matmul expects 2-D operands")
    if a.shape[1] != b.shape[0]:
        raise DimensionError(f"matmul shape mismatch: {a.shape} @ {b.shape}")
    return a @ b


def transpose(a):
    return np.ascontiguousarray(a.T)


def frobenius_norm(a):
    return float(np.sqrt(np.sum(a * a)))


def _seed_block(m, r):
    # deterministic, generically positioned start block for the iteration
    i = np.arange(1, m + 1)[:, None]
    j = np.arange(1, r + 1)[None, :]
    h = np.cos(0.7 * i * j) + 0.01 * np.sin(1.3 * i + j)
    q, _ = kernels.mgs(np.ascontiguousarray(h))
    return q


def _jacobi_orthogonalize(w, v):
    """One-sided Jacobi sweeps making the columns of w mutually orthogonal.

    Applies the same rotations to v so that w_in @ v_rotations == w_out.
    """
    r = w.shape[1]
    for _ in range(_JACOBI_MAX_SWEEPS):
        off = 0.0
        for p in range(r - 1):
            for q in range(p + 1, r):
                alpha = w[:, p] @ w[:, p]
                beta = w[:, q] @ w[:, q]
                gamma = w[:, p] @ w[:, q]
                if alpha * beta == 0.0:
                    continue
                rel = gamma * gamma / (alpha * beta)
                if rel > off:
                    off = rel
                if rel <= _JACOBI_TOL:
                    continue
                zeta = (beta - alpha) / (2.0 * gamma)
                t = np.sign(zeta) / (abs(zeta) + np.sqrt(1.0 + zeta * zeta))
                if zeta == 0.0:
                    t = 1.0
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = c * t
                wp = w[:, p].copy()
                w[:, p] = c * wp - s * w[:, q]
                w[:, q] = s * wp + c * w[:, q]
                vp = v[:, p].copy()
                v[:, p] = c * vp - s * v[:, q]
                v[:, q] = s * vp + c * v[:, q]
        if off <= _JACOBI_TOL:
            break
    return w, v


def _svd_small(c):
    """Full SVD of a small r x r block via one-sided Jacobi."""
    w = np.ascontiguousarray(c, dtype=np.float64).copy()
    v = np.eye(c.shape[1])
    w, v = _jacobi_orthogonalize(w, v)
    norms = np.sqrt(np.sum(w * w, axis=0))
    order = np.argsort(-norms, kind="stable")
    u, sigma = kernels.mgs(np.ascontiguousarray(w[:, order]))
    return u, sigma, np.ascontiguousarray(v[:, order])


def compact_svd(a, r):
    """Leading-r compact SVD of ``a`` by subspace iteration.

    Iterates until the singular-value estimates stabilize to SVD_TOL or
    SVD_MAX_ITERS is reached, whichever comes first; the cap bounds the
    runtime when the spectrum has a near-degenerate gap at rank r, where
    the boundary vectors rotate arbitrarily slowly but the leading
    subspace is already accurate. Raises NumericalError only if the
    iteration produces non-finite values. The sign of each P column is
    fixed so its largest-magnitude entry is positive, which makes
    repeated factorizations deterministic.
    """
    n, m = a.shape
    if not 1 <= r <= min(n, m):
        raise DimensionError(f"rank {r} out of range for shape {a.shape}")
    a = np.ascontiguousarray(a, dtype=np.float64)
    at = np.ascontiguousarray(a.T)
    v = _seed_block(m, r)
    sigma_prev = None
    for _ in range(SVD_MAX_ITERS):
        u, _ = kernels.mgs(np.ascontiguousarray(a @ v))
        v, rdiag = kernels.mgs(np.ascontiguousarray(at @ u))
        if not np.all(np.isfinite(rdiag)):
            raise NumericalError(
                "compact SVD produced non-finite singular value estimates",
                iterations=SVD_MAX_ITERS,
            )
        scale = float(np.max(rdiag)) if np.max(rdiag) > 0 else 1.0
        if sigma_prev is not None:
            change = float(np.max(np.abs(rdiag - sigma_prev))) / scale
            if change <= SVD_TOL:
                break
        sigma_prev = rdiag
    # Rayleigh-Ritz on the converged subspace pins down the triplets.
    c = u.T @ a @ v
    uc, sigma, vc = _svd_small(c)
    P = u @ uc
    Q = v @ vc
    for j in range(r):
        i = int(np.argmax(np.abs(P[:, j])))
        if P[i, j] < 0:
            P[:, j] = -P[:, j]
            Q[:, j] = -Q[:, j]
    return CompactSVD(P=P, sigma=np.maximum(sigma, 0.0), Q=Q)


def cholesky_factor(s):
    """Lower Cholesky factor of a symmetric positive-definite matrix."""
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise DimensionError(f"cholesky needs a square matrix, got {s.shape}")
    scale = max(1.0, float(np.max(np.abs(s))))
    if float(np.max(np.abs(s - s.T))) > 1e-12 * scale:
        raise DimensionError("cholesky needs a symmetric matrix")
    L, pivot = kernels.cholesky(np.ascontiguousarray(s, dtype=np.float64))
    if pivot >= 0:
        raise NotPositiveDefiniteError(pivot)
    return CholeskyFactor(L=L)


def solve_cholesky(f, y):
    """Solve (L L^T) z = y given a CholeskyFactor."""
    y = np.asarray(y, dtype=np.float64)
    k = f.L.shape[0]
    if y.ndim != 1 or y.shape[0] != k:
        raise DimensionError(f"right-hand side length {y.shape} does not match factor size {k}")
    return kernels.solve_cho(f.L, np.ascontiguousarray(y))
