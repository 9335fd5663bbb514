"""Timing comparison of the compiled and pure-python backends.

Run as `python3 -m cornerflow.benchmarks`. Exercises the four hot
primitives (interpolation, symmetric kernel evaluation, the scaled
outer-sum, and the semi-implicit march) on representative sizes and
reports the speedup of whichever compiled backend is importable.
"""
import time

import numpy as np


def _load_backends():
    from . import _slowpath
    backends = [("slow", _slowpath)]
    try:
        from . import _fastpath
        backends.append(("fast", _fastpath))
    except ImportError:
        pass
    return backends


def _time(fn, *args, repeat=3, **kwargs):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args, **kwargs)
        best = min(best, time.perf_counter() - t0)
    return best


def run(sizes=(1 << 20, 4096, 2000)):
    n_eval, n_march, n_steps = sizes
    rng = np.random.default_rng(7)
    tab = np.cumsum(rng.normal(size=8192))
    q = rng.uniform(-10.0, 110.0, n_eval)
    z = np.linspace(-5.0, 5.0, 512)
    w = np.full(512, 1.0 / 512)
    a = np.linspace(-20.0, 20.0, 2048)
    u0 = 0.1 * np.abs(np.linspace(-20.0, 20.0, n_march + 1))
    h = 40.0 / n_march
    rows = []
    for name, mod in _load_backends():
        t_cubic = _time(mod.cubic_eval, tab, 0.0, 0.01, q, 0.0, 0.0)
        t_sym = _time(mod.sym_eval, tab, 0.01, 1, q)
        t_skew = _time(mod.skew_sum, tab, 0.01, 0, a, 1.0, z, w, 1.0)
        t_march = _time(mod.penta_march_u, u0.copy(), n_steps, 1e-6, h,
                        0.1, 0.1, 10.0, repeat=1)
        rows.append((name, t_cubic, t_sym, t_skew, t_march))
    print(f"{'backend':<8}{'cubic_eval':>12}{'sym_eval':>12}"
          f"{'skew_sum':>12}{'march':>12}")
    for name, *ts in rows:
        print(f"{name:<8}" + "".join(f"{t * 1e3:>10.2f}ms" for t in ts))
    if len(rows) == 2:
        print(f"{'speedup':<8}" + "".join(
            f"{rows[0][i] / rows[1][i]:>11.1f}x" for i in range(1, 5)))
    return rows


if __name__ == "__main__":
    run()
