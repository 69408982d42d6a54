"""Benchmark the numba kernels against the pure-numpy fallback."""

import time

import numpy as np

from .kernels import get_backend


def _time(fn, reps):
    # one warmup call so numba compilation is not measured
    fn()
    t0 = time.perf_counter()
    for _ in range(reps):
        fn()
    return (time.perf_counter() - t0) / reps


def _cases(rng, size_scale=1.0):
    k = max(4, int(16 * size_scale))
    n = max(16, int(256 * size_scale))
    r = max(4, int(32 * size_scale))
    b = rng.standard_normal((k, k))
    spd = b @ b.T + 0.1 * np.eye(k)
    y = rng.standard_normal(k)
    tall = np.ascontiguousarray(rng.standard_normal((n, r)))
    m = np.zeros((n, n))
    v = np.zeros((n, n))
    g = rng.standard_normal((n, n))
    return {
        f"cholesky {k}x{k}": lambda impl: impl.cholesky(spd),
        f"cho_solve {k}": lambda impl: impl.solve_cho(impl.cholesky(spd)[0], y),
        f"mgs {n}x{r}": lambda impl: impl.mgs(tall),
        f"adam {n}x{n}": lambda impl: impl.adam_direction(
            m, v, g, 0.9, 0.999, 1e-8, 1.0, 1.0, True
        ),
    }


def run_bench(reps=200, size_scale=1.0, print_fn=print):
    rng = np.random.default_rng(0)
    cases = _cases(rng, size_scale)
    numpy_impl = get_backend("numpy")
    try:
        numba_impl = get_backend("numba")
    except ImportError:
        numba_impl = None
        print_fn("numba unavailable; timing the numpy fallback only")
    print_fn(f"{'kernel':<18} {'numpy (us)':>12} {'numba (us)':>12} {'speedup':>9}")
    for name, call in cases.items():
        t_np = _time(lambda: call(numpy_impl), reps) * 1e6
        if numba_impl is not None:
            t_nb = _time(lambda: call(numba_impl), reps) * 1e6
            print_fn(f"{name:<18} {t_np:>12.1f} {t_nb:>12.1f} {t_np / t_nb:>8.1f}x")
        else:
            print_fn(f"{name:<18} {t_np:>12.1f} {'-':>12} {'-':>9}")
    return 0
