"""Self-contained invariant suites behind the ``verify`` CLI command.

Each suite returns (ok, detail). The NATGALORE_FAULT environment
variable can inject a deliberate fault (currently ``woodbury-sign``)
so the harness itself can be shown to catch regressions.
"""

import os

import numpy as np

from . import natgrad
from .linalg import cholesky_factor, compact_svd, frobenius_norm, solve_cholesky
from .optimizer import OptimizerConfig, init_slots, step
from .tasks import TASK_KINDS, backward, forward_nll, make_task


def _fault(name):
    return os.environ.get("NATGALORE_FAULT", "") == name


def suite_woodbury(instances=500, seed=7):
    rng = np.random.default_rng(seed)
    lams = (1e-4, 1e-2, 1.0)
    worst = 0.0
    for i in range(instances):
        d = int(rng.integers(2, 65))
        s = int(rng.integers(1, 9))
        lam = lams[i % 3]
        hist = natgrad.GradHistory(capacity=s, lam=lam)
        for _ in range(int(rng.integers(1, s + 1))):
            natgrad.push(hist, rng.standard_normal(d))
        g = rng.standard_normal(d)
        gt = np.ravel(natgrad.apply_inverse_fim(hist, g))
        if _fault("woodbury-sign"):
            gt = -gt
        G = natgrad.columns(hist)
        resid = (lam * gt + G @ (G.T @ gt)) - g
        rel = np.max(np.abs(resid)) / np.max(np.abs(g))
        worst = max(worst, rel)
    return worst <= 1e-8, f"max residual {worst:.2e} (bound 1e-8)"


def suite_svd(instances=100, seed=11):
    rng = np.random.default_rng(seed)
    worst_orth = 0.0
    worst_rec = 0.0
    for _ in range(instances):
        n = int(rng.integers(3, 17))
        m = int(rng.integers(3, 17))
        k = int(rng.integers(1, min(n, m) + 1))
        a = rng.standard_normal((n, k)) @ rng.standard_normal((k, m))
        svd = compact_svd(a, k)
        worst_orth = max(
            worst_orth,
            np.max(np.abs(svd.P.T @ svd.P - np.eye(k))),
            np.max(np.abs(svd.Q.T @ svd.Q - np.eye(k))),
        )
        rec = svd.P @ np.diag(svd.sigma) @ svd.Q.T
        denom = max(frobenius_norm(a), 1e-300)
        worst_rec = max(worst_rec, frobenius_norm(a - rec) / denom)
    ok = worst_orth <= 1e-10 and worst_rec <= 1e-8
    return ok, f"max orthogonality defect {worst_orth:.2e}, max reconstruction {worst_rec:.2e}"


def suite_cholesky(instances=1000, seed=13):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(instances):
        k = int(rng.integers(1, 17))
        b = rng.standard_normal((k, k))
        spd = b @ b.T + 0.1 * np.eye(k)
        f = cholesky_factor(spd)
        y = rng.standard_normal(k)
        z = solve_cholesky(f, y)
        rel = np.max(np.abs(spd @ z - y)) / np.max(np.abs(y))
        worst = max(worst, rel)
    return worst <= 1e-9, f"max solve residual {worst:.2e} (bound 1e-9)"


def suite_gradcheck(max_params=200, h=1e-5, seed=3):
    worst = 0.0
    for kind in TASK_KINDS:
        task = make_task(kind, seed)
        batch = task.sample_batch(0)
        _, graph = forward_nll(task.model, batch)
        grads = backward(graph)
        rng = np.random.default_rng(seed)
        for name, g in grads.items():
            theta = task.model.params[name]
            flat_idx = rng.choice(theta.size, size=min(theta.size, max_params // len(grads)),
                                  replace=False)
            scale = max(np.max(np.abs(g)), 1e-8)
            for fi in flat_idx:
                idx = np.unravel_index(fi, theta.shape)
                orig = theta[idx]
                theta[idx] = orig + h
                lp, _ = forward_nll(task.model, batch)
                theta[idx] = orig - h
                lm, _ = forward_nll(task.model, batch)
                theta[idx] = orig
                fd = (lp - lm) / (2 * h)
                worst = max(worst, abs(fd - g[idx]) / scale)
    return worst <= 1e-5, f"max relative gradient error {worst:.2e} (bound 1e-5)"


def suite_mode_reduction(steps=100, seed=5):
    # natural-galore with a zero-capacity history must be bitwise galore
    base = dict(lr=1e-2, rank=4, refresh_period=20, history=0)
    thetas = {}
    for mode in ("galore", "natural-galore"):
        task = make_task("lowrank-regression", seed)
        train_steps(task, OptimizerConfig(mode=mode, **base), steps)
        thetas[mode] = task.model.params["W"].copy()
    if not np.array_equal(thetas["galore"], thetas["natural-galore"]):
        return False, "galore and history-free natural-galore diverged bitwise"

    # full-space adam against a scalar reference implementation
    cfg = OptimizerConfig(mode="adam", lr=1e-3)
    slots = init_slots({"w": np.array([[0.5]])}, cfg)
    w_ref, m, v = 0.5, 0.0, 0.0
    rng = np.random.default_rng(seed)
    for k in range(100):
        g = float(rng.standard_normal())
        step(slots, {"w": np.array([[g]])}, cfg, k)
        m = cfg.beta1 * m + (1 - cfg.beta1) * g
        v = cfg.beta2 * v + (1 - cfg.beta2) * g * g
        mhat = m / (1 - cfg.beta1 ** (k + 1))
        vhat = v / (1 - cfg.beta2 ** (k + 1))
        w_ref -= cfg.lr * mhat / np.sqrt(vhat + cfg.epsilon)
    err = abs(slots[0].theta[0, 0] - w_ref)
    if err > 1e-14:
        return False, f"adam deviates from scalar reference by {err:.2e}"
    return True, "ladder holds (bitwise galore match, adam vs reference <= 1e-14)"


def train_steps(task, config, steps):
    slots = init_slots(task.model.params, config)
    task.model.bind({s.name: s.theta for s in slots})
    for k in range(steps):
        batch = task.sample_batch(k)
        _, graph = forward_nll(task.model, batch)
        step(slots, backward(graph), config, k)
    return slots


SUITES = [
    ("woodbury", suite_woodbury),
    ("svd", suite_svd),
    ("cholesky", suite_cholesky),
    ("gradcheck", suite_gradcheck),
    ("mode-reduction", suite_mode_reduction),
]


def run_all(print_fn=print):
    failures = 0
    for name, fn in SUITES:
        ok, detail = fn()
        status = "PASS" if ok else "FAIL"
        print_fn(f"{name:<16} {status}  {detail}")
        if not ok:
            failures += 1
    return failures
