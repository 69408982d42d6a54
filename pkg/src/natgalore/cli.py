"""Command-line interface: verify, train, compare, memreport, bench."""

import argparse
import os
import sys

import numpy as np

from . import bench as bench_mod
from . import verify as verify_mod
from .compare import DEFAULT_LR_GRID, RunSpec, run_compare
from .errors import NatGaloreError
from .optimizer import MODES, OptimizerConfig, init_slots, memory_report
from .tasks import TASK_KINDS, make_task
from .train import DEFAULT_EVAL_EVERY, train, write_records

_CONFIG_KEYS = {
    "mode": str,
    "lr": float,
    "rank": int,
    "refresh_period": int,
    "lam": float,
    "history": int,
    "alpha": float,
    "weight_decay": float,
    "beta1": float,
    "beta2": float,
    "epsilon": float,
    "bias_correction": lambda s: s.lower() in ("1", "true", "yes"),
    "eps_inside_sqrt": lambda s: s.lower() in ("1", "true", "yes"),
    "min_dim_for_projection": int,
    "clear_history_on_refresh": lambda s: s.lower() in ("1", "true", "yes"),
}


def _read_config_file(path):
    values = {}
    with open(path) as f:
        for line_no, line in enumerate(f, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise NatGaloreError(f"{path}:{line_no}: expected key=value")
            key, raw = (part.strip() for part in line.split("=", 1))
            if key not in _CONFIG_KEYS:
                raise NatGaloreError(f"{path}:{line_no}: unknown key {key!r}")
            values[key] = _CONFIG_KEYS[key](raw)
    return values


def _build_config(args):
    """Defaults, then config file, then explicit command-line flags."""
    values = {}
    if getattr(args, "config", None):
        values.update(_read_config_file(args.config))
    for key in _CONFIG_KEYS:
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = flag
    return OptimizerConfig(**values)


def _add_optimizer_flags(p, lr_list=False):
    p.add_argument("--mode", default=None)
    if lr_list:
        p.add_argument("--lr", default=None,
                       help="learning rate, or comma list to tune per mode")
    else:
        p.add_argument("--lr", type=float, default=None)
    p.add_argument("--rank", type=int, default=None)
    p.add_argument("--refresh-period", dest="refresh_period", type=int, default=None)
    p.add_argument("--lambda", dest="lam", type=float, default=None)
    p.add_argument("--history", type=int, default=None)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--weight-decay", dest="weight_decay", type=float, default=None)
    p.add_argument("--config", default=None, help="key=value config file")


def _out_dir(args):
    out = args.out or os.environ.get("NATGALORE_OUT") or "."
    os.makedirs(out, exist_ok=True)
    return out


def _parse_seeds(text):
    # "0,3,7" is an explicit list; a single integer N means seeds 0..N-1
    parts = [p for p in text.split(",") if p != ""]
    if len(parts) == 1:
        return tuple(range(int(parts[0]))) if int(parts[0]) >= 0 else ()
    return tuple(int(p) for p in parts)


def build_parser():
    ap = argparse.ArgumentParser(prog="natgalore")
    sub = ap.add_subparsers(dest="command", required=True)

    sub.add_parser("verify", help="run the invariant suites")

    tr = sub.add_parser("train", help="single training run")
    tr.add_argument("--task", default="lowrank-regression", choices=TASK_KINDS)
    tr.add_argument("--seed", type=int, default=0)
    tr.add_argument("--budget", type=int, default=500)
    tr.add_argument("--eval-every", type=int, default=DEFAULT_EVAL_EVERY)
    tr.add_argument("--out", default=None)
    _add_optimizer_flags(tr)

    cp = sub.add_parser("compare", help="multi-mode multi-seed benchmark")
    cp.add_argument("--task", default="lowrank-regression", choices=TASK_KINDS)
    cp.add_argument("--seeds", default="10")
    cp.add_argument("--budget", default="500", help="comma list of step budgets")
    cp.add_argument("--out", default=None)
    _add_optimizer_flags(cp, lr_list=True)

    mr = sub.add_parser("memreport", help="memory accounting for one shape")
    mr.add_argument("--n", type=int, required=True)
    mr.add_argument("--m", type=int, required=True)
    mr.add_argument("--rank", type=int, default=None)
    mr.add_argument("--history", type=int, default=None)
    mr.add_argument("--mode", default=None)
    mr.add_argument("--config", default=None)

    bn = sub.add_parser("bench", help="time numba kernels vs the numpy fallback")
    bn.add_argument("--reps", type=int, default=200)
    bn.add_argument("--scale", type=float, default=1.0)
    return ap


def cmd_verify(args):
    failures = verify_mod.run_all()
    return 0 if failures == 0 else 1


def cmd_train(args):
    config = _build_config(args)
    if args.mode is None and not getattr(args, "config", None):
        config.mode = "natural-galore"
    task = make_task(args.task, args.seed)
    result = train(task, config, args.budget, eval_every=args.eval_every)
    out = _out_dir(args)
    path = os.path.join(out, f"{args.task}_{config.mode}_seed{args.seed}.csv")
    write_records(path, result.records)
    status = "DIVERGED" if result.diverged else "ok"
    print(
        f"{status} best_val_loss={result.best_val_loss:.6g} "
        f"best_val_ppl={result.best_val_perplexity:.6g} at step {result.best_step} -> {path}"
    )
    return 1 if result.diverged else 0


def cmd_compare(args):
    base = _build_config(argparse.Namespace(
        config=args.config, mode=None, lr=None,
        **{k: getattr(args, k, None) for k in
           ("rank", "refresh_period", "lam", "history", "alpha", "weight_decay")},
    ))
    modes = tuple(args.mode.split(",")) if args.mode else ("galore", "natural-galore")
    for m in modes:
        if m not in MODES:
            raise NatGaloreError(f"unknown mode {m!r}")
    lr_grid = tuple(float(x) for x in args.lr.split(",")) if args.lr else DEFAULT_LR_GRID
    spec = RunSpec(
        task=args.task,
        modes=modes,
        seeds=_parse_seeds(args.seeds),
        budgets=tuple(int(b) for b in args.budget.split(",")),
        lr_grid=lr_grid,
        out_dir=_out_dir(args),
        base_config=base,
    )
    outcomes, summary = run_compare(spec)
    print(summary, end="")
    diverged = sum(1 for o in outcomes if o.diverged)
    all_diverged = diverged == len(outcomes)
    return 1 if all_diverged else 0


def cmd_memreport(args):
    values = {}
    if args.config:
        values.update(_read_config_file(args.config))
    if args.mode is not None:
        values["mode"] = args.mode
    if args.rank is not None:
        values["rank"] = args.rank
    if args.history is not None:
        values["history"] = args.history
    config = OptimizerConfig(**values)
    if args.n < 1 or args.m < 1:
        raise NatGaloreError("--n and --m must be positive")
    slots = init_slots({"slot": np.zeros((args.n, args.m))}, config)
    # size the factor as if the projector had been refreshed once
    for slot in slots:
        if slot.projector is not None:
            p = slot.projector
            side_dim = args.n if p.side == "left" else args.m
            slot.projector.factor = np.zeros((side_dim, p.rank))
    report = memory_report(slots, config)
    print(report.to_text(), end="")
    if report.state_ratio >= 1.0:
        print("warning: optimizer state is not smaller than full-space Adam "
              f"(ratio {report.state_ratio:.3g}); rank or history too large for this shape")
    sm = report.totals
    if sm.grad_history > sm.adam_moments and sm.grad_history > 0:
        print(f"note: gradient history ({sm.grad_history} elements) exceeds "
              f"the Adam moment storage ({sm.adam_moments} elements)")
    return 0


def cmd_bench(args):
    return bench_mod.run_bench(reps=args.reps, size_scale=args.scale)


_COMMANDS = {
    "verify": cmd_verify,
    "train": cmd_train,
    "compare": cmd_compare,
    "memreport": cmd_memreport,
    "bench": cmd_bench,
}


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except NatGaloreError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
