"""Minimal reverse-mode differentiation on numpy arrays.

Graphs are built implicitly by the op functions; every node caches its
forward value and a vector-Jacobian closure. ``backward`` walks the
topological order once and accumulates gradients additively across
fan-out, so shared parameters get correct summed gradients.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError


class Tensor:
    __slots__ = ("value", "grad", "_parents", "_vjp")

    def __init__(self, value, parents=(), vjp=None):
        self.value = np.asarray(value, dtype=np.float64)
        self.grad = None
        self._parents = tuple(parents)
        self._vjp = vjp

    @property
    def shape(self):
        return self.value.shape


def leaf(value):
    return Tensor(value)


def matmul(a, b):
    if a.value.shape[1] != b.value.shape[0]:
        raise DimensionError(f"matmul shape mismatch: {a.shape} @ {b.shape}")
    return Tensor(
        a.value @ b.value,
        parents=(a, b),
        vjp=lambda g: (g @ b.value.T, a.value.T @ g),
    )


def add(a, b):
    # broadcasting limited to column-bias style (h,1) + (h,B)
    return Tensor(
        a.value + b.value,
        parents=(a, b),
        vjp=lambda g: (_unbroadcast(g, a.value.shape), _unbroadcast(g, b.value.shape)),
    )


def _unbroadcast(g, shape):
    if g.shape == shape:
        return g
    out = g
    for axis, (gs, ts) in enumerate(zip(g.shape, shape)):
        if ts == 1 and gs != 1:
            out = out.sum(axis=axis, keepdims=True)
    return out


def tanh(a):
    y = np.tanh(a.value)
    return Tensor(y, parents=(a,), vjp=lambda g: (g * (1.0 - y * y),))


def relu(a):
    mask = a.value > 0
    return Tensor(a.value * mask, parents=(a,), vjp=lambda g: (g * mask,))


def mean_squared_error(pred, target):
    """Mean over all entries of (pred - target)^2; target is constant."""
    target = np.asarray(target, dtype=np.float64)
    if pred.value.shape != target.shape:
        raise DimensionError(f"prediction {pred.shape} vs target {target.shape}")
    diff = pred.value - target
    n = diff.size
    return Tensor(
        np.sum(diff * diff) / n,
        parents=(pred,),
        vjp=lambda g: (g * 2.0 * diff / n,),
    )


def softmax_cross_entropy(logits, targets):
    """Mean negative log-likelihood of integer targets under softmax logits.

    logits: (V, B) scores per class per batch column; targets: (B,) ints.
    """
    targets = np.asarray(targets)
    V, B = logits.value.shape
    if targets.shape != (B,):
        raise DimensionError(f"targets shape {targets.shape} does not match batch {B}")
    if targets.min() < 0 or targets.max() >= V:
        raise DimensionError(f"target id out of range [0, {V})")
    z = logits.value
    mx = z.max(axis=0)
    ez = np.exp(z - mx)
    sez = ez.sum(axis=0)
    lse = mx + np.log(sez)
    nll = lse - z[targets, np.arange(B)]
    probs = ez / sez

    def vjp(g):
        gz = probs.copy()
        gz[targets, np.arange(B)] -= 1.0
        return (g * gz / B,)

    return Tensor(np.mean(nll), parents=(logits,), vjp=vjp)


@dataclass
class ComputeGraph:
    loss: Tensor
    params: dict  # name -> leaf Tensor


def backward(graph):
    """Reverse pass; returns a dict name -> gradient array."""
    loss = graph.loss
    if loss.value.ndim != 0:
        raise DimensionError("backward expects a scalar loss")
    order = []
    seen = set()
    stack = [(loss, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if id(p) not in seen:
                stack.append((p, False))
    for node in order:
        node.grad = np.zeros_like(node.value)
    loss.grad = np.ones(())
    for node in reversed(order):
        if node._vjp is None:
            continue
        for parent, pg in zip(node._parents, node._vjp(node.grad)):
            parent.grad += pg
    # parameters not reachable from the loss get a zero gradient
    return {
        name: (t.grad if t.grad is not None else np.zeros_like(t.value))
        for name, t in graph.params.items()
    }
