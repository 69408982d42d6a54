"""Inverse empirical Fisher transform on low-rank gradients.

The damped gradient-outer-product matrix lambda*I + G G^T (with G the
stacked recent vectorized gradients) is never formed. Its inverse is
applied through the small s x s system

    (I + G^T G / lambda) z = G^T g
    g_nat = g / lambda - G z / lambda**2

solved by Cholesky factorization, so the cost and workspace stay
O(d*s + s^2) for gradients of length d.
"""

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import DimensionError, NumericalError

DEFAULT_LAMBDA = 1e-2
DEFAULT_WINDOW = 4


@dataclass
class GradHistory:
    """Ring buffer of the last ``capacity`` vectorized gradients."""

    capacity: int
    lam: float = DEFAULT_LAMBDA
    _buf: np.ndarray | None = field(default=None, repr=False)  # d x capacity
    count: int = 0
    _head: int = 0  # next write position

    def __post_init__(self):
        if self.capacity < 0:
            raise DimensionError(f"capacity must be >= 0, got {self.capacity}")
        if not self.lam > 0:
            raise DimensionError(f"lambda must be positive, got {self.lam}")


def push(hist, g_low):
    """Append vec(g_low), evicting the oldest column when full."""
    if hist.capacity == 0:
        return hist
    v = np.ravel(g_low)
    if hist._buf is None:
        hist._buf = np.zeros((v.size, hist.capacity))
    elif v.size != hist._buf.shape[0]:
        raise DimensionError(
            f"gradient length {v.size} does not match history length {hist._buf.shape[0]}"
        )
    hist._buf[:, hist._head] = v
    hist._head = (hist._head + 1) % hist.capacity
    hist.count = min(hist.count + 1, hist.capacity)
    return hist


def columns(hist):
    """Stored columns, oldest first, shape d x count."""
    if hist._buf is None or hist.count == 0:
        return np.zeros((0, 0))
    idx = [(hist._head - hist.count + i) % hist.capacity for i in range(hist.count)]
    return np.ascontiguousarray(hist._buf[:, idx])


def reset(hist):
    """Drop all stored gradients; capacity and lambda are kept."""
    hist.count = 0
    hist._head = 0
    return hist


def apply_inverse_fim(hist, g_low, _audit=None):
    """Return (lambda*I + G G^T)^{-1} applied to g_low, in g_low's shape.

    With an empty history the transform is the identity (the gradient
    passes through unchanged rather than being rescaled by 1/lambda).
    """
    if hist.count == 0 or hist.capacity == 0:
        return g_low
    G = columns(hist)
    g = np.ravel(g_low)
    if g.size != G.shape[0]:
        raise DimensionError(
            f"gradient length {g.size} does not match history length {G.shape[0]}"
        )
    lam = hist.lam
    y = G.T @ g
    S = G.T @ G
    S /= lam
    S[np.diag_indices_from(S)] += 1.0
    L, pivot = kernels.cholesky(np.ascontiguousarray(S))
    if pivot >= 0:
        raise NumericalError(
            f"Cholesky of the damped Gram matrix failed at pivot {pivot}; "
            "gradient history is likely contaminated by NaN/Inf",
            pivot_index=pivot,
        )
    z = kernels.solve_cho(L, y)
    g_nat = g / lam - (G @ z) / (lam * lam)
    if _audit is not None:
        _audit["aux_elements"] = y.size + S.size + L.size + z.size + g_nat.size
    return g_nat.reshape(g_low.shape)
