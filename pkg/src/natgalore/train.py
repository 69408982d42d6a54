"""Training loop producing per-evaluation records and CSV output."""

import csv
import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import optimizer as opt
from .errors import DimensionError
from .tasks import backward, forward_nll

CSV_HEADER = ["step", "train_loss", "val_loss", "perplexity", "wall_ms", "mode", "seed"]
DIVERGENCE_LOSS = 1e6
DEFAULT_EVAL_EVERY = 25


@dataclass
class TrainRecord:
    step: int
    train_loss: float
    val_loss: float
    perplexity: float
    wall_ms: float
    mode: str
    seed: int


@dataclass
class TrainResult:
    records: list = field(default_factory=list)
    diverged: bool = False
    best_val_loss: float = math.inf
    best_step: int = 0

    @property
    def best_val_perplexity(self):
        return math.exp(self.best_val_loss) if self.records else math.inf

    @property
    def final_val_loss(self):
        return self.records[-1].val_loss if self.records else math.inf


def _safe_exp(x):
    try:
        return math.exp(x)
    except OverflowError:
        return math.inf


def validation_loss(task):
    total = 0.0
    for batch in task.val_batches:
        loss, _ = forward_nll(task.model, batch)
        total += loss
    return total / len(task.val_batches)


def train(task, config, budget, eval_every=DEFAULT_EVAL_EVERY, slots=None, start_step=0):
    """Run exactly ``budget`` optimizer steps on the task.

    Pass ``slots``/``start_step`` from a loaded checkpoint to resume; the
    per-step batch derivation makes the continuation identical to an
    uninterrupted run.
    """
    if budget < 1:
        raise DimensionError(f"budget must be >= 1, got {budget}")
    if slots is None:
        slots = opt.init_slots(task.model.params, config)
    # model reads the slot-owned arrays, so in-place updates are visible
    task.model.bind({s.name: s.theta for s in slots})
    result = TrainResult()
    t0 = time.perf_counter()
    train_loss = math.nan
    for k in range(start_step, budget):
        batch = task.sample_batch(k)
        train_loss, graph = forward_nll(task.model, batch)
        if not math.isfinite(train_loss) or train_loss > DIVERGENCE_LOSS:
            result.diverged = True
            break
        grads = backward(graph)
        opt.step(slots, grads, config, k)
        done = k + 1
        if done % eval_every == 0 or done == budget:
            val_loss = validation_loss(task)
            result.records.append(
                TrainRecord(
                    step=done,
                    train_loss=train_loss,
                    val_loss=val_loss,
                    perplexity=_safe_exp(val_loss),
                    wall_ms=(time.perf_counter() - t0) * 1e3,
                    mode=config.mode,
                    seed=task.seed,
                )
            )
            if val_loss < result.best_val_loss:
                result.best_val_loss = val_loss
                result.best_step = done
    result.slots = slots
    return result


def write_records(path, records):
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(CSV_HEADER)
        for r in records:
            w.writerow(
                [r.step, repr(r.train_loss), repr(r.val_loss), repr(r.perplexity),
                 repr(r.wall_ms), r.mode, r.seed]
            )


def read_records(path):
    records = []
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames != CSV_HEADER:
            raise DimensionError(f"unexpected CSV header in {path}: {reader.fieldnames}")
        for row in reader:
            records.append(
                TrainRecord(
                    step=int(row["step"]),
                    train_loss=float(row["train_loss"]),
                    val_loss=float(row["val_loss"]),
                    perplexity=float(row["perplexity"]),
                    wall_ms=float(row["wall_ms"]),
                    mode=row["mode"],
                    seed=int(row["seed"]),
                )
            )
    return records
