"""Desk-scale training tasks: models, datasets, deterministic batches.

All randomness is derived from (task kind, seed, step) seed sequences,
so a task rebuilt with the same seed produces bitwise-identical batches
at every step. That property is what makes checkpoint-resume and
fixed-seed reruns exactly reproducible.
"""

import importlib.resources
import zlib
from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .errors import DimensionError

TASK_KINDS = ("lowrank-regression", "mlp-classify", "char-lm")
_TASK_SALT = 0x6E61746C  # task-level rng stream
_BATCH_SALT = 0x62617463  # per-step batch stream


@dataclass
class Batch:
    inputs: np.ndarray
    targets: np.ndarray

    @property
    def size(self):
        return self.inputs.shape[1]


class Model:
    """Named parameter matrices plus a loss graph builder."""

    def __init__(self):
        self.params = {}

    def bind(self, arrays):
        """Point named parameters at external arrays (optimizer slots)."""
        for name, arr in arrays.items():
            self.params[name] = arr

    def _leaves(self):
        return {name: ad.leaf(arr) for name, arr in self.params.items()}

    def loss_graph(self, batch):
        raise NotImplementedError


class LinearRegressionModel(Model):
    """Single weight matrix, squared loss against planted targets."""

    def __init__(self, w0):
        super().__init__()
        self.params["W"] = np.array(w0, dtype=np.float64)

    def loss_graph(self, batch):
        leaves = self._leaves()
        pred = ad.matmul(leaves["W"], ad.leaf(batch.inputs))
        loss = ad.mean_squared_error(pred, batch.targets)
        return ad.ComputeGraph(loss=loss, params=leaves)


class MLPClassifier(Model):
    """Two-layer tanh MLP with softmax cross-entropy loss."""

    def __init__(self, w1, b1, w2, b2):
        super().__init__()
        self.params["W1"] = np.array(w1, dtype=np.float64)
        self.params["b1"] = np.array(b1, dtype=np.float64)
        self.params["W2"] = np.array(w2, dtype=np.float64)
        self.params["b2"] = np.array(b2, dtype=np.float64)

    def logits(self, leaves, inputs):
        h = ad.tanh(ad.add(ad.matmul(leaves["W1"], ad.leaf(inputs)), leaves["b1"]))
        return ad.add(ad.matmul(leaves["W2"], h), leaves["b2"])

    def loss_graph(self, batch):
        leaves = self._leaves()
        logits = self.logits(leaves, batch.inputs)
        loss = ad.softmax_cross_entropy(logits, batch.targets)
        return ad.ComputeGraph(loss=loss, params=leaves)


def forward_nll(model, batch):
    """Mean negative log-likelihood of the batch plus the retained graph."""
    graph = model.loss_graph(batch)
    return float(graph.loss.value), graph


backward = ad.backward


@dataclass
class Task:
    kind: str
    seed: int
    model: Model
    val_batches: list
    _sampler: object

    def sample_batch(self, step):
        rng = np.random.default_rng(
            np.random.SeedSequence([_BATCH_SALT, self.seed, int(step)])
        )
        return self._sampler(rng)


def load_corpus():
    return (
        importlib.resources.files("natgalore")
        .joinpath("data/corpus.txt")
        .read_bytes()
    )


def corpus_vocabulary(corpus):
    return sorted(set(corpus))


def make_task(kind, seed):
    if kind == "lowrank-regression":
        return _make_lowrank_regression(seed)
    if kind == "mlp-classify":
        return _make_mlp_classify(seed)
    if kind == "char-lm":
        return _make_char_lm(seed)
    raise DimensionError(f"unknown task kind {kind!r}; choose from {TASK_KINDS}")


def _task_rng(kind, seed):
    return np.random.default_rng(
        np.random.SeedSequence([_TASK_SALT, zlib.crc32(kind.encode()), seed])
    )


def _make_lowrank_regression(seed, n=64, planted_rank=4, batch_size=16):
    rng = _task_rng("lowrank-regression", seed)
    a = rng.standard_normal((n, planted_rank))
    b = rng.standard_normal((planted_rank, n))
    w_star = a @ b / np.sqrt(planted_rank)
    w0 = 0.1 * rng.standard_normal((n, n))
    model = LinearRegressionModel(w0)

    def sampler(r):
        x = r.standard_normal((n, batch_size))
        return Batch(inputs=x, targets=w_star @ x)

    val_rng = _task_rng("lowrank-regression-val", seed)
    val = [sampler(val_rng) for _ in range(4)]
    task = Task("lowrank-regression", seed, model, val, sampler)
    task.w_star = w_star
    return task


def _make_mlp_classify(seed, dim=64, hidden=64, classes=8, batch_size=32):
    rng = _task_rng("mlp-classify", seed)
    means = 2.0 * rng.standard_normal((classes, dim))
    w1 = rng.standard_normal((hidden, dim)) / np.sqrt(dim)
    b1 = np.zeros((hidden, 1))
    w2 = rng.standard_normal((classes, hidden)) / np.sqrt(hidden)
    b2 = np.zeros((classes, 1))
    model = MLPClassifier(w1, b1, w2, b2)

    def sampler(r):
        labels = r.integers(0, classes, size=batch_size)
        x = means[labels].T + r.standard_normal((dim, batch_size))
        return Batch(inputs=x, targets=labels)

    val_rng = _task_rng("mlp-classify-val", seed)
    val = [sampler(val_rng) for _ in range(4)]
    return Task("mlp-classify", seed, model, val, sampler)


def _make_char_lm(seed, context=8, hidden=64, batch_size=32, corpus=None):
    corpus = load_corpus() if corpus is None else corpus
    vocab = corpus_vocabulary(corpus)
    v = len(vocab)
    byte_to_id = np.full(256, -1, dtype=np.int64)
    for i, byte in enumerate(vocab):
        byte_to_id[byte] = i
    ids = byte_to_id[np.frombuffer(corpus, dtype=np.uint8)]
    split = int(0.9 * len(ids))
    train_ids, val_ids = ids[:split], ids[split:]

    rng = _task_rng("char-lm", seed)
    w1 = rng.standard_normal((hidden, context * v)) / np.sqrt(context * v)
    b1 = np.zeros((hidden, 1))
    w2 = rng.standard_normal((v, hidden)) / np.sqrt(hidden)
    b2 = np.zeros((v, 1))
    model = MLPClassifier(w1, b1, w2, b2)

    def encode(stream, positions):
        x = np.zeros((context * v, len(positions)))
        for col, pos in enumerate(positions):
            window = stream[pos : pos + context]
            x[np.arange(context) * v + window, col] = 1.0
        return x

    def make_batch(stream, r):
        positions = r.integers(0, len(stream) - context, size=batch_size)
        return Batch(
            inputs=encode(stream, positions),
            targets=stream[positions + context],
        )

    def sampler(r):
        return make_batch(train_ids, r)

    val_rng = _task_rng("char-lm-val", seed)
    val = [make_batch(val_ids, val_rng) for _ in range(4)]
    task = Task("char-lm", seed, model, val, sampler)
    task.vocab_size = v
    return task
