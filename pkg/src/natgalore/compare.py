"""Multi-mode, multi-seed convergence benchmark.

For every (mode, budget) the learning rate is tuned from the supplied
grid by mean final validation loss across all seeds; the summary then
reports mean/stdev of the best validation loss per mode and, when both
low-rank modes are present, the per-seed win rate of natural-galore
against galore at each budget (final validation loss, lower-or-equal
wins).
"""

import dataclasses
import math
import os
import statistics
from dataclasses import dataclass, field

from .optimizer import OptimizerConfig
from .tasks import make_task
from .train import train, write_records

DEFAULT_LR_GRID = (1e-2, 3e-2, 1e-1)


@dataclass
class RunSpec:
    task: str = "lowrank-regression"
    modes: tuple = ("galore", "natural-galore")
    seeds: tuple = tuple(range(10))
    budgets: tuple = (500,)
    lr_grid: tuple = DEFAULT_LR_GRID
    out_dir: str | None = None
    base_config: OptimizerConfig = field(default_factory=OptimizerConfig)

    def __post_init__(self):
        if not self.modes or not self.seeds:
            raise ValueError("need at least one mode and one seed")


@dataclass
class RunOutcome:
    mode: str
    seed: int
    budget: int
    lr: float
    final_val_loss: float
    best_val_loss: float
    diverged: bool
    records: list


def _config_for(spec, mode, lr):
    return dataclasses.replace(spec.base_config, mode=mode, lr=lr)


def _run(spec, mode, seed, budget, lr):
    task = make_task(spec.task, seed)
    result = train(task, _config_for(spec, mode, lr), budget)
    return RunOutcome(
        mode=mode,
        seed=seed,
        budget=budget,
        lr=lr,
        final_val_loss=result.final_val_loss,
        best_val_loss=result.best_val_loss,
        diverged=result.diverged,
        records=result.records,
    )


def tune_lr(spec, mode, budget):
    """Pick the grid lr with the lowest mean final validation loss."""
    if len(spec.lr_grid) == 1:
        return spec.lr_grid[0]
    best_lr, best_score = None, math.inf
    for lr in spec.lr_grid:
        losses = []
        for seed in spec.seeds:
            out = _run(spec, mode, seed, budget, lr)
            losses.append(out.final_val_loss if not out.diverged else math.inf)
        score = sum(losses) / len(losses)
        if score < best_score:
            best_score, best_lr = score, lr
    return best_lr


def run_compare(spec):
    """Execute the full benchmark; returns (outcomes, summary_text)."""
    outcomes = []
    tuned = {}
    for budget in spec.budgets:
        for mode in spec.modes:
            lr = tune_lr(spec, mode, budget)
            tuned[(mode, budget)] = lr
            for seed in spec.seeds:
                out = _run(spec, mode, seed, budget, lr)
                outcomes.append(out)
                if spec.out_dir:
                    name = f"{spec.task}_{mode}_b{budget}_seed{seed}.csv"
                    write_records(os.path.join(spec.out_dir, name), out.records)
    summary = summarize(spec, outcomes, tuned)
    if spec.out_dir:
        with open(os.path.join(spec.out_dir, "summary.txt"), "w") as f:
            f.write(summary)
    return outcomes, summary


def win_rate(outcomes, budget):
    """Fraction of seeds where natural-galore's final loss <= galore's."""
    nat = {o.seed: o.final_val_loss for o in outcomes
           if o.mode == "natural-galore" and o.budget == budget}
    gal = {o.seed: o.final_val_loss for o in outcomes
           if o.mode == "galore" and o.budget == budget}
    seeds = sorted(set(nat) & set(gal))
    if not seeds:
        return None, 0
    wins = sum(1 for s in seeds if nat[s] <= gal[s])
    return wins / len(seeds), len(seeds)


def summarize(spec, outcomes, tuned):
    lines = [f"task={spec.task} seeds={list(spec.seeds)}"]
    for budget in spec.budgets:
        for mode in spec.modes:
            vals = [o.best_val_loss for o in outcomes
                    if o.mode == mode and o.budget == budget and not o.diverged]
            diverged = sum(1 for o in outcomes
                           if o.mode == mode and o.budget == budget and o.diverged)
            if vals:
                mean = statistics.fmean(vals)
                sd = statistics.stdev(vals) if len(vals) > 1 else 0.0
                lines.append(
                    f"budget={budget} mode={mode} lr={tuned[(mode, budget)]:g} "
                    f"best_val_loss={mean:.6g}+-{sd:.3g} "
                    f"runs={len(vals)} diverged={diverged}"
                )
            else:
                lines.append(f"budget={budget} mode={mode} all runs diverged")
        rate, count = win_rate(outcomes, budget)
        if rate is not None:
            lines.append(
                f"budget={budget} natural-galore_win_rate={rate:.2f} over {count} seeds"
            )
    return "\n".join(lines) + "\n"
