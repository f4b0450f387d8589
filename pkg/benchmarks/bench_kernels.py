"""Compiled vs pure-Python shooting kernel on the same shots.

    python benchmarks/bench_kernels.py [--repeat N] [--pure-repeat N]

Both paths run in one process: the pure path is the kernel module
re-executed with ``njit`` as the identity.  Results must agree to rounding.
"""
import argparse
import math
import time
from contextlib import contextmanager

from supercrit import _accel, _shootkernel, growth, shooting

CASES = [
    ("pure_exp", growth.pure_exp(), 2.0 * math.log(2.0)),
    ("power_exp p=3", growth.power_exp(3.0), 4.0),
    ("iter_exp depth=1", growth.iter_exp(1), 3.0),
    ("exp_poly e^t + t^2", growth.exp_poly((0.0, 0.0, 1.0)), 2.5),
]


@contextmanager
def pure_kernel():
    saved = shooting.sk
    shooting.sk = _accel.pure_module(_shootkernel)
    try:
        yield
    finally:
        shooting.sk = saved


def best_of(fn, repeat):
    best = math.inf
    out = None
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=20)
    ap.add_argument("--pure-repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if not _accel.NUMBA_ENABLED:
        raise SystemExit("numba is disabled (SUPERCRIT_DISABLE_NUMBA); nothing to compare")

    print(f"{'case':<22}{'steps':>7}{'numba [ms]':>12}{'python [ms]':>13}{'speedup':>9}{'rel diff':>11}")
    for name, model, mu in CASES:
        def shot():
            return shooting.integrate(model, mu, diagnostics=False)
        shot()  # compile / load from cache
        t_fast, fast = best_of(shot, args.repeat)
        with pure_kernel():
            t_slow, slow = best_of(shot, args.pure_repeat)
        diff = abs(fast.lam - slow.lam) / abs(slow.lam)
        print(f"{name:<22}{fast.s.size:>7}{1e3 * t_fast:>12.3f}{1e3 * t_slow:>13.1f}"
              f"{t_slow / t_fast:>9.0f}{diff:>11.1e}")


if __name__ == "__main__":
    main()
