"""Adam moment tracking on (possibly projected) gradient matrices."""

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import DimensionError, NumericalError


@dataclass
class AdamState:
    m: np.ndarray = field(repr=False)
    v: np.ndarray = field(repr=False)
    step_count: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    bias_correction: bool = True
    eps_inside_sqrt: bool = True  # paper-literal m / sqrt(v + eps)


def init_adam(shape, beta1=0.9, beta2=0.999, epsilon=1e-8, bias_correction=True,
              eps_inside_sqrt=True):
    return AdamState(
        m=np.zeros(shape),
        v=np.zeros(shape),
        beta1=beta1,
        beta2=beta2,
        epsilon=epsilon,
        bias_correction=bias_correction,
        eps_inside_sqrt=eps_inside_sqrt,
    )


def adam_update(state, g, slot_name=None):
    """Advance the moments with gradient ``g`` and return the update direction.

    Mutates ``state`` in place and returns ``(update, state)``.
    """
    if g.shape != state.m.shape:
        raise DimensionError(f"gradient shape {g.shape} does not match state {state.m.shape}")
    if not np.all(np.isfinite(g)):
        where = f" for parameter {slot_name!r}" if slot_name else ""
        raise NumericalError(f"non-finite gradient{where} at Adam step {state.step_count + 1}")
    state.step_count += 1
    if state.bias_correction:
        c1 = 1.0 - state.beta1 ** state.step_count
        c2 = 1.0 - state.beta2 ** state.step_count
    else:
        c1 = 1.0
        c2 = 1.0
    u = kernels.adam_direction(
        state.m, state.v, np.ascontiguousarray(g, dtype=np.float64),
        state.beta1, state.beta2, state.epsilon, c1, c2, state.eps_inside_sqrt,
    )
    return u, state


def apply_weight_decay(theta, rate, lr):
    """Decoupled multiplicative decay in the full parameter space."""
    if rate < 0:
        raise DimensionError(f"weight decay rate must be >= 0, got {rate}")
    if rate == 0.0:
        return theta
    theta *= 1.0 - lr * rate
    return theta
