"""Compare the numba and numpy flavours of the hot kernels.

Run with ``python benchmarks/bench_kernels.py``. Both flavours are called
directly, so the ``AVSRD_NO_NUMBA`` flag does not matter here; numba
compilation happens in an untimed warm-up call.
"""

import argparse
import time

import numpy as np

from avsrd import kernels
from avsrd._accel import HAVE_NUMBA
from avsrd.avs import build_set
from avsrd.lp import PIVOT_TOL, FEAS_TOL
from avsrd.models import two_bernoulli
from avsrd.sim import make_rng


def timeit(fn, repeat):
    fn()  # warm-up / compile
    best = np.inf
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    return best


def cases(rng):
    d = 1.0 - np.eye(2)
    P = rng.dirichlet(np.ones(2), size=200)
    d3 = rng.uniform(0, 1, size=(3, 3))
    np.fill_diagonal(d3, 0.0)
    P3 = rng.dirichlet(np.ones(3), size=100)

    C = build_set(two_bernoulli(), "cheating")
    sf = C._proj._sf
    Q = rng.dirichlet(np.ones(2), size=500)

    masks = rng.integers(1, 4, size=200_000)
    cum = np.array([[2.0, 2.0], [2.0, 2.0], [0.0, 2.0], [0.4, 2.0]])
    u = rng.random(200_000)

    words = rng.integers(0, 2, size=(4000, 200))
    x = rng.integers(0, 2, size=200)

    yield "rd_batch binary x200", lambda k: k.rd_batch(P, d, 0.1, 1e-9, 300, 200_000)
    yield "rd_batch ternary x100", lambda k: k.rd_batch(P3, d3, 0.05, 1e-9, 300, 200_000)
    yield "l1_batch x500", lambda k: k.l1_batch(sf.A, sf.b, sf.c, sf.slack_col, np.arange(2), Q, PIVOT_TOL, FEAS_TOL, 50_000)
    yield "select_by_rules 2e5", lambda k: k.select_by_rules(masks, cum, u)
    yield "block_distortion 4000x200", lambda k: k.block_distortion(x, words, d)


class Flavour:
    def __init__(self, numba):
        sfx = "numba" if numba else "numpy"
        self.rd_batch = getattr(kernels, f"rd_batch_{sfx}")
        self.l1_batch = getattr(kernels, f"l1_batch_{sfx}")
        self.select_by_rules = kernels.select_by_rules_numba if numba else kernels._select_by_rules_np
        self.block_distortion = kernels.block_distortion_numba if numba else kernels._block_distortion_np


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if not HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")
    rng = make_rng(2024)
    nb, npy = Flavour(True), Flavour(False)
    print(f"{'kernel':28s} {'numba [s]':>12s} {'numpy [s]':>12s} {'speedup':>9s}")
    for name, call in cases(rng):
        t_nb = timeit(lambda: call(nb), args.repeat)
        t_np = timeit(lambda: call(npy), args.repeat)
        print(f"{name:28s} {t_nb:12.5f} {t_np:12.5f} {t_np / t_nb:9.1f}")


if __name__ == "__main__":
    main()
