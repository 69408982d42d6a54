"""Low-rank gradient subspace for one parameter matrix.

A left projector holds the leading left singular vectors of a recent
gradient; a right projector holds the leading right singular vectors.
The factor is recomputed every ``refresh_period`` optimizer steps.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError
from .linalg import compact_svd

DEFAULT_REFRESH_PERIOD = 200


@dataclass
class Projector:
    side: str  # "left" or "right"
    rank: int
    refresh_period: int = DEFAULT_REFRESH_PERIOD
    factor: np.ndarray | None = field(default=None, repr=False)
    last_refresh_step: int = -1

    @property
    def initialized(self):
        return self.factor is not None


def pick_side(n, m):
    """Left projection when n <= m, right otherwise (smaller state)."""
    return "left" if n <= m else "right"


def should_refresh(p, step):
    if not p.initialized:
        return True
    return step - p.last_refresh_step >= p.refresh_period


def refresh(p, grad, step):
    """Recompute the factor from the current raw gradient's compact SVD."""
    n, m = grad.shape
    if p.rank > min(n, m):
        raise DimensionError(f"rank {p.rank} exceeds min{grad.shape}")
    svd = compact_svd(grad, p.rank)
    p.factor = svd.P if p.side == "left" else svd.Q
    p.last_refresh_step = step
    return p


def project(p, grad):
    """Map a full gradient into the low-rank coordinates."""
    f = _require_factor(p)
    if p.side == "left":
        if grad.shape[0] != f.shape[0]:
            raise DimensionError(f"gradient shape {grad.shape} does not match factor {f.shape}")
        return f.T @ grad
    if grad.shape[1] != f.shape[0]:
        raise DimensionError(f"gradient shape {grad.shape} does not match factor {f.shape}")
    return grad @ f


def project_back(p, u):
    """Map low-rank coordinates back to the full parameter shape."""
    f = _require_factor(p)
    if p.side == "left":
        if u.shape[0] != f.shape[1]:
            raise DimensionError(f"update shape {u.shape} does not match factor {f.shape}")
        return f @ u
    if u.shape[1] != f.shape[1]:
        raise DimensionError(f"update shape {u.shape} does not match factor {f.shape}")
    return u @ f.T


def projected_shape(p, n, m):
    return (p.rank, m) if p.side == "left" else (n, p.rank)


def _require_factor(p):
    if p.factor is None:
        raise DimensionError("projector used before first refresh")
    return p.factor
